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

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "nopain/boundary.hpp"
#include "nopain/feature_store.hpp"
#include "nopain/sdot.hpp"

namespace nopain {

/// A mode-mixed feature on the open segment between two targets.
struct AdversarialFeature {
  std::vector<double> vector;
  std::size_t source_i = 0;
  std::size_t source_ik = 0;
  double lambda_i = 0.5;
  double lambda_ik = 0.5;
  double angle = 0.0;
  std::vector<double> probe;
  // Probe sat exactly on a mass centre; the weights collapse to (1, 0) or
  // (0, 1) and the feature is that cell's target.
  bool degenerate_probe = false;
};

/// Per-cell mean of the cached Monte-Carlo members. Uses stats.centers when
/// they are populated, otherwise recomputes them from the cache. Empty cells
/// have no centre.
std::vector<std::optional<std::vector<double>>> mass_centers(
    const CellStatistics& stats);

/// Smoothed transport at the pair's probe x:
///
///   lambda_j = (1 / |x - c_j|) / (1 / |x - c_i| + 1 / |x - c_ik|)
///   y_hat    = lambda_i * y_i + lambda_ik * y_ik
///
/// y_hat is clamped coordinate-wise into [min(y_i, y_ik), max(y_i, y_ik)],
/// which moves it by at most one rounding error.
AdversarialFeature interpolate(const SingularPair& pair,
                               std::span<const double> c_i,
                               std::span<const double> c_ik,
                               std::span<const double> y_i,
                               std::span<const double> y_ik);

struct AttackSummary {
  std::size_t anchors = 0;
  std::size_t pairs_found = 0;
  std::size_t emitted = 0;
  std::size_t skipped_no_exceeding_angle = 0;
  std::size_t skipped_probe_exhausted = 0;
  std::size_t skipped_missing_center = 0;
  std::size_t skipped_zero_vector = 0;
  std::size_t degenerate_probes = 0;
  // min, 25%, median, 75%, max of the emitted pair angles (linear
  // interpolation between order statistics). Empty when nothing is emitted.
  std::optional<std::array<double, 5>> angle_quantiles;
};

struct AttackResult {
  std::vector<SingularPair> pairs;           // every detected pair
  std::vector<AdversarialFeature> features;  // anchor order
  AttackSummary summary;
};

/// Detects singular pairs and interpolates one adversarial feature per pair.
///
/// Throws NotConvergedInput when h or stats do not describe a solved
/// decomposition of fs (misaligned sizes, non-finite heights, frequencies
/// not summing to 1, or no retained samples).
AttackResult run_attack(const FeatureSet& fs, const HeightVector& h,
                        const CellStatistics& stats, const BoundaryConfig& cfg);

/// Adversarial vectors as a feature set, rows in output order.
FeatureSet adversarial_feature_set(std::span<const AdversarialFeature> features,
                                   std::size_t dim);

/// "anchor,neighbor,lambda_i,lambda_ik,angle_rad"
void write_attack_manifest(std::span<const AdversarialFeature> features,
                           std::ostream& out);

/// "anchor,neighbor,cos_sim,angle_rad,probe_file_offset"; the offset is the
/// byte position of the pair's probe in the NPFT file written by
/// probe_feature_set.
void write_singular_pairs(std::span<const SingularPair> pairs, std::size_t dim,
                          std::ostream& out);
FeatureSet probe_feature_set(std::span<const SingularPair> pairs,
                             std::size_t dim);

void write_attack_summary(const AttackSummary& summary, std::ostream& out);

}  // namespace nopain
