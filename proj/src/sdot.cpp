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

#include "nopain/sdot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "byte_io.hpp"
#include "nopain/parallel.hpp"
#include "nopain/random.hpp"

namespace nopain {

namespace {

// Plain left-to-right dot product. Every hyperplane evaluation in the
// library goes through here so scores compare bit-for-bit.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t t = 0; t < n; ++t) s += a[t] * b[t];
  return s;
}

std::size_t argmax_cell(const FeatureSet& fs, std::span<const double> h,
                        const double* x) {
  const std::size_t n = fs.count();
  const std::size_t d = fs.dim();
  const double* y = fs.values().data();
  std::size_t best = 0;
  double best_value = dot(y, x, d) + h[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double v = dot(y + i * d, x, d) + h[i];
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

void check_aligned(const FeatureSet& fs, const HeightVector& h) {
  if (h.size() != fs.count())
    throw DimensionMismatch("height vector has " + std::to_string(h.size()) +
                            " entries for " + std::to_string(fs.count()) +
                            " features");
}

// Draws `samples` normals chunk by chunk and calls fn(chunk, j, x) for each
// sample j with its d-vector x. fn runs concurrently for different chunks.
template <typename Fn>
void for_each_sample(std::size_t samples, std::size_t dim, std::uint64_t seed,
                     std::size_t threads, Fn&& fn) {
  const std::size_t chunks = (samples + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng(derive_seed(seed, {stream::kChunk, c}));
    std::vector<double> x(dim);
    const std::size_t end = std::min(samples, (c + 1) * kSampleChunk);
    for (std::size_t j = c * kSampleChunk; j < end; ++j) {
      rng.fill_normal(x);
      fn(c, j, std::span<const double>(x));
    }
  });
}

// Training-batch frequencies only; nothing is retained.
std::vector<double> batch_frequencies(const FeatureSet& fs,
                                      const HeightVector& h,
                                      std::size_t samples, std::uint64_t seed,
                                      std::size_t threads) {
  const std::size_t n = fs.count();
  const std::size_t chunks = (samples + kSampleChunk - 1) / kSampleChunk;
  std::vector<std::size_t> counts(chunks * n, 0);
  for_each_sample(samples, fs.dim(), seed, threads,
                  [&](std::size_t c, std::size_t, std::span<const double> x) {
                    ++counts[c * n + argmax_cell(fs, h.values(), x.data())];
                  });
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t total = 0;
    for (std::size_t c = 0; c < chunks; ++c) total += counts[c * n + i];
    w[i] = static_cast<double>(total) / static_cast<double>(samples);
  }
  return w;
}

// Fills counts, frequencies and centres from the retained batch. The
// reduction runs sequentially in sample order so centres are bit-stable.
void summarize(CellStatistics& stats, std::size_t n) {
  const std::size_t d = stats.dim;
  const std::size_t samples = stats.assignments.size();
  stats.member_counts.assign(n, 0);
  std::vector<double> sums(n * d, 0.0);
  for (std::size_t j = 0; j < samples; ++j) {
    const std::size_t i = stats.assignments[j];
    ++stats.member_counts[i];
    const double* x = stats.samples.data() + j * d;
    for (std::size_t t = 0; t < d; ++t) sums[i * d + t] += x[t];
  }
  stats.frequencies.assign(n, 0.0);
  stats.centers.assign(n, std::nullopt);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t count = stats.member_counts[i];
    stats.frequencies[i] =
        static_cast<double>(count) / static_cast<double>(samples);
    if (count == 0) continue;
    std::vector<double> c(sums.begin() + i * d, sums.begin() + (i + 1) * d);
    for (double& v : c) v /= static_cast<double>(count);
    stats.centers[i] = std::move(c);
  }
}

}  // namespace

void HeightVector::center() {
  if (values_.empty()) return;
  const double mean = std::accumulate(values_.begin(), values_.end(), 0.0) /
                      static_cast<double>(values_.size());
  for (double& v : values_) v -= mean;
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw InvalidArgument("solver config: " + what);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(eta > 0.0)) fail("eta must be positive");
  if (patience == 0) fail("patience must be positive");
  if (!(batch_growth > 1.0)) fail("batch_growth must exceed 1");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) fail("lr_decay must lie in (0, 1)");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (max_batch_size == 0) fail("max_batch_size must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
}

double hyperplane_value(std::span<const double> y, double h,
                        std::span<const double> x) {
  if (y.size() != x.size())
    throw DimensionMismatch("hyperplane of dimension " + std::to_string(y.size()) +
                            " evaluated at a point of dimension " +
                            std::to_string(x.size()));
  return dot(y.data(), x.data(), y.size()) + h;
}

std::size_t assign_cell(const FeatureSet& fs, const HeightVector& h,
                        std::span<const double> x) {
  check_aligned(fs, h);
  if (x.size() != fs.dim())
    throw DimensionMismatch("query point has dimension " +
                            std::to_string(x.size()) + ", features have " +
                            std::to_string(fs.dim()));
  return argmax_cell(fs, h.values(), x.data());
}

CellStatistics estimate_cell_stats(const FeatureSet& fs, const HeightVector& h,
                                   std::size_t samples, std::uint64_t seed,
                                   std::size_t threads) {
  check_aligned(fs, h);
  if (samples == 0) throw InvalidArgument("sample count must be positive");
  const std::size_t n = fs.count();
  const std::size_t d = fs.dim();

  CellStatistics stats;
  stats.dim = d;
  stats.samples.resize(samples * d);
  stats.assignments.resize(samples);
  for_each_sample(samples, d, seed, threads,
                  [&](std::size_t, std::size_t j, std::span<const double> x) {
                    std::copy(x.begin(), x.end(), stats.samples.begin() + j * d);
                    stats.assignments[j] = argmax_cell(fs, h.values(), x.data());
                  });

  summarize(stats, n);
  return stats;
}

FeatureSet cell_cache_features(const CellStatistics& stats) {
  if (stats.sample_count() == 0)
    throw InvalidArgument("cell statistics retain no samples");
  std::vector<std::int64_t> labels(stats.assignments.begin(),
                                   stats.assignments.end());
  return FeatureSet(stats.sample_count(), stats.dim, stats.samples,
                    std::move(labels), "cell-cache");
}

CellStatistics cell_stats_from_cache(const FeatureSet& cache,
                                     std::size_t cells) {
  if (!cache.labels())
    throw MalformedFile("cell cache has no cell labels");
  CellStatistics stats;
  stats.dim = cache.dim();
  stats.samples.assign(cache.values().begin(), cache.values().end());
  stats.assignments.reserve(cache.count());
  for (std::int64_t label : *cache.labels()) {
    if (label < 0 || static_cast<std::uint64_t>(label) >= cells)
      throw DimensionMismatch("cell cache refers to cell " +
                              std::to_string(label) + " of " +
                              std::to_string(cells));
    stats.assignments.push_back(static_cast<std::size_t>(label));
  }
  summarize(stats, cells);
  return stats;
}

double energy(std::span<const double> frequencies) {
  const double target = 1.0 / static_cast<double>(frequencies.size());
  double e = 0.0;
  for (double w : frequencies) e += (w - target) * (w - target);
  return e;
}

double energy(const CellStatistics& stats) { return energy(stats.frequencies); }

std::vector<double> height_gradient(std::span<const double> frequencies) {
  const double target = 1.0 / static_cast<double>(frequencies.size());
  std::vector<double> g(frequencies.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = frequencies[i] - target;
  const double mean =
      std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
  for (double& v : g) v -= mean;
  return g;
}

std::vector<double> height_gradient(const CellStatistics& stats) {
  return height_gradient(stats.frequencies);
}

void Adam::step(std::span<double> x, std::span<const double> grad, double lr) {
  if (x.size() != m_.size() || grad.size() != m_.size())
    throw DimensionMismatch("Adam: parameter size changed");
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < x.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    x[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

SolveResult solve(const FeatureSet& fs, const SolverConfig& cfg) {
  cfg.validate();
  require_min_count(fs, 2);
  const std::size_t n = fs.count();

  std::size_t batch = cfg.batch_size ? cfg.batch_size : 10 * n;
  batch = std::min(batch, cfg.max_batch_size);
  const std::size_t eval_floor = 10 * n;
  double lr = cfg.learning_rate;

  HeightVector h(n);
  Adam adam(n, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

  SolveReport report;
  report.batch_size_trajectory.emplace_back(1, batch);

  double best_energy = std::numeric_limits<double>::infinity();
  HeightVector best_heights = h;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto w = batch_frequencies(
        fs, h, batch, derive_seed(cfg.seed, {stream::kTrainBatch, epoch}),
        cfg.threads);
    const double e = energy(w);
    report.records.push_back({epoch, e, batch, lr});
    report.energy_trajectory.emplace_back(epoch, e);
    report.epochs_run = epoch;

    if (e < best_energy) {
      best_energy = e;
      best_heights = h;
      since_best = 0;
    } else {
      ++since_best;
    }

    if (e < cfg.eta) {
      auto stats = estimate_cell_stats(
          fs, h, std::max(batch, eval_floor),
          derive_seed(cfg.seed, {stream::kEvalBatch, epoch}), cfg.threads);
      const double fresh = energy(stats);
      if (fresh < cfg.eta) {
        report.final_energy = fresh;
        report.converged = true;
        return {std::move(h), std::move(stats), std::move(report)};
      }
    }

    const auto g = height_gradient(w);
    adam.step(h.values(), g, lr);
    h.center();

    if (since_best >= cfg.patience) {
      const auto grown = static_cast<std::size_t>(
          std::ceil(static_cast<double>(batch) * cfg.batch_growth));
      batch = std::min(grown, cfg.max_batch_size);
      lr *= cfg.lr_decay;
      since_best = 0;
      report.batch_size_trajectory.emplace_back(epoch + 1, batch);
    }
  }

  auto stats = estimate_cell_stats(
      fs, best_heights, std::max(batch, eval_floor),
      derive_seed(cfg.seed, {stream::kEvalBatch, 0}), cfg.threads);
  report.final_energy = energy(stats);
  report.converged = false;
  const std::string what =
      "solver did not reach eta = " + std::to_string(cfg.eta) + " within " +
      std::to_string(cfg.max_epochs) + " epochs (best fresh energy " +
      std::to_string(report.final_energy) + ")";
  throw NotConverged(what, {std::move(best_heights), std::move(stats),
                            std::move(report)});
}

void write_solve_log(const SolveReport& report, std::ostream& out) {
  out << "epoch,energy,batch_size,learning_rate\n";
  char line[128];
  for (const auto& r : report.records) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%zu,%.17g\n", r.epoch, r.energy,
                  r.batch_size, r.learning_rate);
    out << line;
  }
}

std::vector<std::uint8_t> encode_heights(const HeightFile& file) {
  detail::ByteWriter w;
  w.magic("NPHT");
  w.u32(1);
  w.u64(file.heights.size());
  for (double v : file.heights.values()) w.f64(v);
  w.u64(file.seed);
  w.f64(file.final_energy);
  return w.take();
}

HeightFile decode_heights(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "NPHT");
  r.expect_magic("NPHT");
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw MalformedFile("NPHT: unsupported version " + std::to_string(version));
  const std::uint64_t n = r.u64();
  if (n == 0) throw MalformedFile("NPHT: empty height vector");
  if (!detail::payload_fits(n, 1, 8, r.remaining()) ||
      r.remaining() != n * 8 + 16)
    throw MalformedFile("NPHT: file length disagrees with declared N");
  std::vector<double> values(n);
  for (double& v : values) {
    v = r.f64();
    if (!std::isfinite(v)) throw NonFiniteData("NPHT: non-finite height");
  }
  HeightFile file;
  file.heights = HeightVector(std::move(values));
  file.seed = r.u64();
  file.final_energy = r.f64();
  return file;
}

HeightFile load_heights(const std::filesystem::path& path) {
  return decode_heights(read_file_bytes(path));
}

void save_heights(const HeightFile& file, const std::filesystem::path& path) {
  write_file_bytes(path, encode_heights(file));
}

}  // namespace nopain
