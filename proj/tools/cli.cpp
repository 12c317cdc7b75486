// Copyright 2026 The NoPain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nopain/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <vector>

#include "nopain/attack.hpp"
#include "nopain/boundary.hpp"
#include "nopain/error.hpp"
#include "nopain/feature_store.hpp"
#include "nopain/metrics.hpp"
#include "nopain/random.hpp"
#include "nopain/run_config.hpp"
#include "nopain/sdot.hpp"

namespace nopain::cli {

namespace {

// Broken internal invariant; maps to exit code 4.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Stream tag for cell statistics re-estimated by the attack command.
constexpr std::uint64_t kAttackCells = 0x4154544B00000006ULL;

// Options every subcommand shares. Layering, lowest to highest priority:
// built-in defaults, NOPAIN_SEED, --config file, --set pairs, dedicated
// flags.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--set", overrides, "override one config key (key=value)");
    seed_opt = cmd->add_option("--seed", seed, "seed for every stage (overrides NOPAIN_SEED)");
    threads_opt = cmd->add_option("--threads", threads, "worker threads; 0 = all cores");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (const char* env = std::getenv("NOPAIN_SEED"); env && *env) {
      std::uint64_t s = 0;
      const std::string_view text(env);
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), s);
      if (ec != std::errc() || ptr != text.data() + text.size())
        throw InvalidArgument("NOPAIN_SEED is not an unsigned integer: " + std::string(text));
      cfg.set_seed(s);
    }
    if (!config_path.empty()) cfg.apply_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw InvalidArgument("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_opt->count()) cfg.set_seed(seed);
    if (threads_opt->count()) cfg.threads = threads;
    cfg.solver.threads = cfg.threads;
    cfg.boundary.threads = cfg.threads;
    return cfg;
  }
};

// Thread count never changes results, so files leave it out and stay
// byte-identical across --threads.
void echo_config(const RunConfig& cfg, std::ostream& out, std::string_view prefix,
                 bool with_threads = true) {
  for (const auto& [key, value] : cfg.resolved()) {
    if (!with_threads && key == "run.threads") continue;
    out << prefix << key << " = " << value << "\n";
  }
}

template <typename Writer>
void write_text_file(const std::string& path, Writer&& writer) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoFailure("cannot open " + path + " for writing");
  writer(f);
  f.flush();
  if (!f) throw IoFailure("write failed for " + path);
}

// ---------------------------------------------------------------- synth

struct SynthCommand {
  CommonOptions common;
  std::string output;
  std::size_t modes = 0, n = 0, dim = 0;
  double separation = 0.0, stddev = 0.0;
  CLI::Option *modes_opt, *n_opt, *dim_opt, *sep_opt, *sd_opt;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "generate a Gaussian-mixture feature file");
    common.attach(cmd);
    modes_opt = cmd->add_option("--modes", modes, "number of mixture modes");
    n_opt = cmd->add_option("--n", n, "number of feature vectors");
    dim_opt = cmd->add_option("--dim", dim, "feature dimension");
    sep_opt = cmd->add_option("--separation", separation, "distance of each mode mean from 0");
    sd_opt = cmd->add_option("--stddev", stddev, "per-coordinate mode standard deviation");
    cmd->add_option("-o,--output", output, "output NPFT file")->required();
    cmd->callback([] {});
  }

  int run(std::ostream& out, std::ostream& err) {
    RunConfig cfg = common.resolve();
    if (modes_opt->count()) cfg.synth.modes = modes;
    if (n_opt->count()) cfg.synth.n = n;
    if (dim_opt->count()) cfg.synth.dim = dim;
    if (sep_opt->count()) cfg.synth.separation = separation;
    if (sd_opt->count()) cfg.synth.stddev = stddev;
    echo_config(cfg, err, "# ");
    const auto& s = cfg.synth;
    const MixtureSpec spec = axis_mixture(s.modes, s.dim, s.separation, s.stddev, s.seed);
    const FeatureSet fs = synth_mixture(spec, s.n, s.dim);
    save_features(fs, output);
    out << "wrote " << fs.count() << " vectors of dimension " << fs.dim() << " to "
        << output << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------- solve

struct SolveCommand {
  CommonOptions common;
  std::string input, output, log_path, cells_path;
  std::size_t max_epochs = 0, batch_size = 0, patience = 0;
  double eta = 0.0, lr = 0.0;
  CLI::Option *epochs_opt, *batch_opt, *patience_opt, *eta_opt, *lr_opt;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("solve", "fit Brenier heights to a feature file");
    common.attach(cmd);
    cmd->add_option("-i,--input", input, "input feature file (NPFT or .csv)")->required();
    cmd->add_option("-o,--output", output, "output NPHT height file")->required();
    cmd->add_option("--log", log_path, "per-epoch CSV log");
    cmd->add_option("--cells", cells_path, "write the final cell cache (NPFT, labels = cell)");
    epochs_opt = cmd->add_option("--max-epochs", max_epochs, "epoch cap");
    batch_opt = cmd->add_option("--batch-size", batch_size, "initial batch size M (0 = 10N)");
    patience_opt = cmd->add_option("--patience", patience, "epochs without improvement before M grows");
    eta_opt = cmd->add_option("--eta", eta, "energy threshold");
    lr_opt = cmd->add_option("--lr", lr, "initial learning rate");
  }

  void finish(const RunConfig& cfg, const SolveResult& result) const {
    const HeightFile file{result.heights, cfg.solver.seed, result.report.final_energy};
    save_heights(file, output);
    if (!log_path.empty())
      write_text_file(log_path, [&](std::ostream& f) {
        echo_config(cfg, f, "# ", false);
        write_solve_log(result.report, f);
      });
    if (!cells_path.empty()) save_features(cell_cache_features(result.stats), cells_path);
  }

  int run(std::ostream& out, std::ostream& err) {
    RunConfig cfg = common.resolve();
    if (epochs_opt->count()) cfg.solver.max_epochs = max_epochs;
    if (batch_opt->count()) cfg.solver.batch_size = batch_size;
    if (patience_opt->count()) cfg.solver.patience = patience;
    if (eta_opt->count()) cfg.solver.eta = eta;
    if (lr_opt->count()) cfg.solver.learning_rate = lr;
    echo_config(cfg, err, "# ");

    const FeatureSet fs = load_features(input);
    try {
      const SolveResult result = solve(fs, cfg.solver);
      if (!(result.report.final_energy < cfg.solver.eta))
        throw InternalError("solver reported convergence above eta");
      for (double v : result.heights.values())
        if (!std::isfinite(v)) throw InternalError("solver produced a non-finite height");
      finish(cfg, result);
      out << "final_energy: " << result.report.final_energy << "\n"
          << "epochs: " << result.report.epochs_run << "\n"
          << "converged: true\n";
      return kExitOk;
    } catch (const NotConverged& e) {
      finish(cfg, e.partial());
      out << "final_energy: " << e.partial().report.final_energy << "\n"
          << "epochs: " << e.partial().report.epochs_run << "\n"
          << "converged: false\n";
      err << "error: " << e.what() << " (best heights written to " << output << ")\n";
      return kExitNotConverged;
    }
  }
};

// ---------------------------------------------------------------- attack

struct AttackCommand {
  CommonOptions common;
  std::string features_path, heights_path, output, manifest, pairs_path, probes_path,
      cells_path;
  std::size_t k = 0, samples = 0;
  double tau = 0.0;
  std::string selection, criterion;
  bool resample = false, allow_unconverged = false;
  CLI::Option *k_opt, *tau_opt, *samples_opt, *selection_opt, *criterion_opt;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("attack", "detect singular boundaries and interpolate adversarial features");
    common.attach(cmd);
    cmd->add_option("-f,--features", features_path, "feature file the heights were fitted to")->required();
    cmd->add_option("-H,--heights", heights_path, "NPHT height file")->required();
    cmd->add_option("-o,--output", output, "adversarial features (NPFT)")->required();
    cmd->add_option("--manifest", manifest, "CSV manifest of the adversarial features");
    cmd->add_option("--pairs", pairs_path, "CSV of detected singular pairs");
    cmd->add_option("--probes", probes_path, "NPFT of the probes referenced by --pairs");
    cmd->add_option("--cells", cells_path, "cell cache written by solve --cells");
    k_opt = cmd->add_option("--k", k, "neighbours ranked per cell");
    tau_opt = cmd->add_option("--tau", tau, "angle threshold");
    samples_opt = cmd->add_option("--samples", samples, "samples when re-estimating cells (0 = 10N)");
    selection_opt = cmd->add_option("--pair-selection", selection, "max-angle | first-exceeding");
    criterion_opt = cmd->add_option("--angle-criterion", criterion, "radians | cosine");
    cmd->add_flag("--resample", resample, "ignore --cells and draw a fresh batch");
    cmd->add_flag("--allow-unconverged", allow_unconverged, "accept heights above eta");
  }

  int run(std::ostream& out, std::ostream& err) {
    RunConfig cfg = common.resolve();
    if (k_opt->count()) cfg.boundary.k = k;
    if (tau_opt->count()) cfg.boundary.tau = tau;
    if (samples_opt->count()) cfg.attack.samples = samples;
    if (selection_opt->count()) cfg.set("boundary.pair_selection", selection);
    if (criterion_opt->count()) cfg.set("boundary.angle_criterion", criterion);
    if (resample) cfg.attack.resample = true;
    if (allow_unconverged) cfg.attack.allow_unconverged = true;
    echo_config(cfg, err, "# ");

    const FeatureSet fs = load_features(features_path);
    const HeightFile heights = load_heights(heights_path);
    if (heights.heights.size() != fs.count())
      throw DimensionMismatch("heights cover " + std::to_string(heights.heights.size()) +
                              " cells but the feature file has " +
                              std::to_string(fs.count()) + " vectors");
    if (!(heights.final_energy < cfg.solver.eta) && !cfg.attack.allow_unconverged) {
      err << "error: heights were saved with energy " << heights.final_energy
          << " >= eta = " << cfg.solver.eta << "; rerun solve or pass --allow-unconverged\n";
      return kExitNotConverged;
    }

    const auto& b = cfg.boundary;
    if (b.criterion == AngleCriterion::kRadians && !(b.tau > 0.0 && b.tau < std::numbers::pi))
      err << "warning: tau = " << b.tau << " lies outside (0, pi); "
          << (b.tau >= std::numbers::pi ? "no angle can exceed it" : "every angle exceeds it")
          << "\n";

    CellStatistics stats;
    if (!cells_path.empty() && !cfg.attack.resample) {
      stats = cell_stats_from_cache(load_features(cells_path), fs.count());
    } else {
      const std::size_t m = cfg.attack.samples ? cfg.attack.samples : 10 * fs.count();
      stats = estimate_cell_stats(fs, heights.heights, m,
                                  derive_seed(b.seed, {kAttackCells}), cfg.threads);
    }

    const AttackResult result = run_attack(fs, heights.heights, stats, b);
    for (const auto& f : result.features) {
      if (std::abs(f.lambda_i + f.lambda_ik - 1.0) > 1e-12)
        throw InternalError("interpolation weights do not sum to 1");
    }

    if (!result.features.empty()) {
      save_features(adversarial_feature_set(result.features, fs.dim()), output);
    } else {
      err << "warning: no singular pair exceeds tau = " << b.tau
          << "; no adversarial features written to " << output << "\n";
    }
    if (!manifest.empty())
      write_text_file(manifest, [&](std::ostream& f) { write_attack_manifest(result.features, f); });
    if (!pairs_path.empty())
      write_text_file(pairs_path,
                      [&](std::ostream& f) { write_singular_pairs(result.pairs, fs.dim(), f); });
    if (!probes_path.empty() && !result.pairs.empty())
      save_features(probe_feature_set(result.pairs, fs.dim()), probes_path);
    write_attack_summary(result.summary, out);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- metrics

struct MetricsCommand {
  CommonOptions common;
  std::string original, adversarial, output, variant;
  CLI::Option* variant_opt;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("metrics", "Chamfer distance between paired point clouds");
    common.attach(cmd);
    cmd->add_option("--original", original, "original clouds (NPPC)")->required();
    cmd->add_option("--adversarial", adversarial, "adversarial clouds (NPPC)")->required();
    cmd->add_option("-o,--output", output, "per-pair CSV");
    variant_opt = cmd->add_option("--cd-variant", variant, "sq-mean | mean");
  }

  int run(std::ostream& out, std::ostream& err) {
    RunConfig cfg = common.resolve();
    if (variant_opt->count()) cfg.cd_variant = parse_chamfer_variant(variant);
    echo_config(cfg, err, "# ");

    auto a = load_clouds(original);
    auto b = load_clouds(adversarial);
    if (a.size() != b.size())
      throw DimensionMismatch("original file has " + std::to_string(a.size()) +
                              " clouds, adversarial file has " + std::to_string(b.size()));
    std::vector<CloudPair> pairs;
    pairs.reserve(a.size());
    for (std::size_t p = 0; p < a.size(); ++p)
      pairs.push_back({std::move(a[p]), std::move(b[p])});
    const BatchChamfer cd = batch_cd(pairs, cfg.cd_variant, cfg.threads);
    if (!output.empty()) write_text_file(output, [&](std::ostream& f) { write_batch_cd(cd, f); });
    char line[64];
    std::snprintf(line, sizeof line, "%.17g", cd.mean);
    out << "pairs: " << cd.per_pair.size() << "\n"
        << "cd_variant: " << chamfer_variant_name(cfg.cd_variant) << "\n"
        << "mean_cd: " << line << "\n";
    return kExitOk;
  }
};

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-discrete OT singular-boundary attack toolkit", "nopain"};
  app.require_subcommand(1);
  SynthCommand synth;
  SolveCommand solve_cmd;
  AttackCommand attack;
  MetricsCommand metrics;
  synth.attach(app);
  solve_cmd.attach(app);
  attack.attach(app);
  metrics.attach(app);

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("nopain");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (app.got_subcommand("synth")) return synth.run(out, err);
    if (app.got_subcommand("solve")) return solve_cmd.run(out, err);
    if (app.got_subcommand("attack")) return attack.run(out, err);
    if (app.got_subcommand("metrics")) return metrics.run(out, err);
  } catch (const NotConverged& e) {
    err << "error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInputError;
}

}  // namespace nopain::cli
