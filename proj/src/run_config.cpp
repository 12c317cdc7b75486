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

#include "nopain/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "nopain/error.hpp"

namespace nopain {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  throw InvalidArgument("config key '" + std::string(key) + "': cannot parse '" +
                        std::string(value) + "' as " + std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, const char* kind) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size())
    bad_value(key, value, kind);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field size_field(std::string_view key, T RunConfig::*group, std::size_t T::*member) {
  return {key,
          [group, member](RunConfig& c, std::string_view k, std::string_view v) {
            c.*group.*member = parse_number<std::size_t>(k, v, "an unsigned integer");
          },
          [group, member](const RunConfig& c) {
            return std::to_string(c.*group.*member);
          }};
}

template <typename T>
Field seed_field(std::string_view key, T RunConfig::*group, std::uint64_t T::*member) {
  return {key,
          [group, member](RunConfig& c, std::string_view k, std::string_view v) {
            c.*group.*member = parse_number<std::uint64_t>(k, v, "an unsigned integer");
          },
          [group, member](const RunConfig& c) {
            return std::to_string(c.*group.*member);
          }};
}

template <typename T>
Field real_field(std::string_view key, T RunConfig::*group, double T::*member) {
  return {key,
          [group, member](RunConfig& c, std::string_view k, std::string_view v) {
            c.*group.*member = parse_number<double>(k, v, "a real number");
          },
          [group, member](const RunConfig& c) {
            return format_double(c.*group.*member);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using R = RunConfig;
    std::vector<Field> f = {
        size_field("solver.batch_size", &R::solver, &SolverConfig::batch_size),
        real_field("solver.learning_rate", &R::solver, &SolverConfig::learning_rate),
        real_field("solver.eta", &R::solver, &SolverConfig::eta),
        size_field("solver.patience", &R::solver, &SolverConfig::patience),
        real_field("solver.batch_growth", &R::solver, &SolverConfig::batch_growth),
        real_field("solver.lr_decay", &R::solver, &SolverConfig::lr_decay),
        size_field("solver.max_epochs", &R::solver, &SolverConfig::max_epochs),
        size_field("solver.max_batch_size", &R::solver, &SolverConfig::max_batch_size),
        seed_field("solver.seed", &R::solver, &SolverConfig::seed),
        real_field("solver.adam_beta1", &R::solver, &SolverConfig::adam_beta1),
        real_field("solver.adam_beta2", &R::solver, &SolverConfig::adam_beta2),
        real_field("solver.adam_eps", &R::solver, &SolverConfig::adam_eps),
        size_field("boundary.k", &R::boundary, &BoundaryConfig::k),
        real_field("boundary.tau", &R::boundary, &BoundaryConfig::tau),
        size_field("boundary.max_probe_attempts", &R::boundary,
                   &BoundaryConfig::max_probe_attempts),
        seed_field("boundary.seed", &R::boundary, &BoundaryConfig::seed),
        size_field("synth.modes", &R::synth, &SynthSettings::modes),
        size_field("synth.n", &R::synth, &SynthSettings::n),
        size_field("synth.dim", &R::synth, &SynthSettings::dim),
        real_field("synth.separation", &R::synth, &SynthSettings::separation),
        real_field("synth.stddev", &R::synth, &SynthSettings::stddev),
        seed_field("synth.seed", &R::synth, &SynthSettings::seed),
        size_field("attack.samples", &R::attack, &AttackSettings::samples),
    };
    f.push_back({"boundary.pair_selection",
                 [](R& c, std::string_view k, std::string_view v) {
                   if (v == "max-angle")
                     c.boundary.pair_selection = PairSelection::kMaxAngle;
                   else if (v == "first-exceeding")
                     c.boundary.pair_selection = PairSelection::kFirstExceeding;
                   else
                     bad_value(k, v, "max-angle or first-exceeding");
                 },
                 [](const R& c) -> std::string {
                   return c.boundary.pair_selection == PairSelection::kMaxAngle
                              ? "max-angle"
                              : "first-exceeding";
                 }});
    f.push_back({"boundary.angle_criterion",
                 [](R& c, std::string_view k, std::string_view v) {
                   if (v == "radians")
                     c.boundary.criterion = AngleCriterion::kRadians;
                   else if (v == "cosine")
                     c.boundary.criterion = AngleCriterion::kRawCosine;
                   else
                     bad_value(k, v, "radians or cosine");
                 },
                 [](const R& c) -> std::string {
                   return c.boundary.criterion == AngleCriterion::kRadians ? "radians"
                                                                           : "cosine";
                 }});
    f.push_back({"attack.resample",
                 [](R& c, std::string_view k, std::string_view v) {
                   c.attack.resample = parse_bool(k, v);
                 },
                 [](const R& c) -> std::string { return c.attack.resample ? "true" : "false"; }});
    f.push_back({"attack.allow_unconverged",
                 [](R& c, std::string_view k, std::string_view v) {
                   c.attack.allow_unconverged = parse_bool(k, v);
                 },
                 [](const R& c) -> std::string {
                   return c.attack.allow_unconverged ? "true" : "false";
                 }});
    f.push_back({"metrics.cd_variant",
                 [](R& c, std::string_view, std::string_view v) {
                   c.cd_variant = parse_chamfer_variant(v);
                 },
                 [](const R& c) { return std::string(chamfer_variant_name(c.cd_variant)); }});
    f.push_back({"run.threads",
                 [](R& c, std::string_view k, std::string_view v) {
                   c.threads = parse_number<std::size_t>(k, v, "an unsigned integer");
                 },
                 [](const R& c) { return std::to_string(c.threads); }});
    std::sort(f.begin(), f.end(),
              [](const Field& a, const Field& b) { return a.key < b.key; });
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto& table = fields();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const Field& f) { return f.key == key; });
  if (it == table.end())
    throw InvalidArgument("unknown config key '" + std::string(key) + "'");
  it->set(*this, key, trim(value));
}

void RunConfig::apply_text(std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidArgument(std::string(origin) + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(std::string(origin) + ":" + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_text(buffer.str(), path.string());
}

void RunConfig::set_seed(std::uint64_t seed) {
  solver.seed = seed;
  boundary.seed = seed;
  synth.seed = seed;
}

std::vector<std::pair<std::string, std::string>> RunConfig::resolved() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(std::string(f.key), f.get(*this));
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

}  // namespace nopain
