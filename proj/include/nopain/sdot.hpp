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

// Semi-discrete optimal transport from N(0, I) onto a uniform discrete
// measure. The transport map is the gradient of the Brenier potential
//
//   u_h(x) = max_i <y_i, x> + h_i,
//
// so x lands in the cell of whichever hyperplane is highest. The solver
// adjusts the heights h until every cell carries source mass 1/N.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nopain/error.hpp"
#include "nopain/feature_store.hpp"

namespace nopain {

/// Brenier heights, one per feature row. Defined up to an additive constant;
/// the solver keeps them mean-centred.
class HeightVector {
 public:
  HeightVector() = default;
  explicit HeightVector(std::size_t n) : values_(n, 0.0) {}
  explicit HeightVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  void center();

  bool operator==(const HeightVector&) const = default;

 private:
  std::vector<double> values_;
};

struct SolverConfig {
  std::size_t batch_size = 0;  // M; 0 selects 10 * N
  double learning_rate = 1e-2;
  double eta = 2e-3;
  std::size_t patience = 50;  // s
  double batch_growth = 2.0;
  double lr_decay = 0.8;
  std::size_t max_epochs = 20000;
  std::size_t max_batch_size = std::size_t{1} << 20;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t threads = 0;  // 0 = hardware concurrency; never affects results

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// Monte-Carlo estimate of the cell decomposition under one batch.
struct CellStatistics {
  std::size_t dim = 0;
  std::vector<double> frequencies;           // w_i(h), sums to 1
  std::vector<std::size_t> member_counts;
  std::vector<std::optional<std::vector<double>>> centers;  // mean of members

  // Retained batch: sample j is samples[j*dim .. (j+1)*dim), in cell
  // assignments[j].
  std::vector<double> samples;
  std::vector<std::size_t> assignments;

  std::size_t cell_count() const { return frequencies.size(); }
  std::size_t sample_count() const { return assignments.size(); }
  std::span<const double> sample(std::size_t j) const {
    return {samples.data() + j * dim, dim};
  }
};

struct EpochRecord {
  std::size_t epoch;
  double energy;
  std::size_t batch_size;
  double learning_rate;
};

struct SolveReport {
  double final_energy = 0.0;
  std::size_t epochs_run = 0;
  std::vector<std::pair<std::size_t, std::size_t>> batch_size_trajectory;
  std::vector<std::pair<std::size_t, double>> energy_trajectory;
  std::vector<EpochRecord> records;
  bool converged = false;
};

struct SolveResult {
  HeightVector heights;
  CellStatistics stats;
  SolveReport report;
};

/// Raised when max_epochs elapse without a fresh-batch energy below eta.
/// Carries the lowest-energy heights seen and their evaluation statistics.
class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, SolveResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const SolveResult& partial() const { return partial_; }

 private:
  SolveResult partial_;
};

/// <y, x> + h. Throws DimensionMismatch when y and x differ in length.
double hyperplane_value(std::span<const double> y, double h,
                        std::span<const double> x);

/// Index of the highest hyperplane at x; ties go to the lowest index.
std::size_t assign_cell(const FeatureSet& fs, const HeightVector& h,
                        std::span<const double> x);

/// Draws `samples` standard-normal vectors and assigns each to its cell.
///
/// Samples are generated in fixed chunks of kSampleChunk, chunk c drawing
/// from derive_seed(seed, {stream::kChunk, c}); the result is bit-identical
/// for any thread count. Every sample is retained in the result.
CellStatistics estimate_cell_stats(const FeatureSet& fs, const HeightVector& h,
                                   std::size_t samples, std::uint64_t seed,
                                   std::size_t threads = 0);

inline constexpr std::size_t kSampleChunk = 2048;

/// Retained samples as a feature set labelled with their cell index, the
/// on-disk form of a cell cache.
FeatureSet cell_cache_features(const CellStatistics& stats);

/// Rebuilds statistics from a cache written by cell_cache_features.
CellStatistics cell_stats_from_cache(const FeatureSet& cache, std::size_t cells);

/// Sum_i (w_i - 1/N)^2.
double energy(std::span<const double> frequencies);
double energy(const CellStatistics& stats);

/// (w - 1/N) shifted to zero mean.
std::vector<double> height_gradient(std::span<const double> frequencies);
std::vector<double> height_gradient(const CellStatistics& stats);

/// Adam over a height vector. Minimal on purpose: the only parameters the
/// solver touches are the step size and the moment estimates.
class Adam {
 public:
  Adam(std::size_t n, double beta1, double beta2, double eps)
      : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  /// x <- x - lr * m_hat / (sqrt(v_hat) + eps)
  void step(std::span<double> x, std::span<const double> grad, double lr);

  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

/// Fits the heights by Monte-Carlo Adam descent on the energy.
///
/// Each epoch draws a batch of M source samples and steps h along the
/// zero-mean gradient. After `patience` epochs without a new minimum of the
/// batch energy, M grows by batch_growth and the step size decays by
/// lr_decay. When the batch energy drops below eta the same heights are
/// re-evaluated on a fresh batch of max(M, 10N) samples, and only that
/// evaluation can end the run. The returned statistics are that fresh batch.
///
/// Throws NotConverged after max_epochs.
SolveResult solve(const FeatureSet& fs, const SolverConfig& cfg);

/// "epoch,energy,batch_size,learning_rate" CSV, one line per epoch.
void write_solve_log(const SolveReport& report, std::ostream& out);

// NPHT v1 height files.
//   0..3 magic "NPHT", 4..7 version u32 LE (= 1), 8..15 N u64 LE,
//   then N f64 LE heights, then u64 LE seed and f64 LE final energy.
struct HeightFile {
  HeightVector heights;
  std::uint64_t seed = 0;
  double final_energy = 0.0;
};

std::vector<std::uint8_t> encode_heights(const HeightFile& file);
HeightFile decode_heights(std::span<const std::uint8_t> bytes);
HeightFile load_heights(const std::filesystem::path& path);
void save_heights(const HeightFile& file, const std::filesystem::path& path);

}  // namespace nopain
