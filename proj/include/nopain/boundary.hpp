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

// Singular-boundary detection. For each cell W_i a probe x inside the cell
// ranks all hyperplanes at x; the K runners-up are the cell's neighbours.
// A neighbour whose feature makes a wide angle with y_i marks a boundary
// across which the transport map jumps between distant targets.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nopain/feature_store.hpp"
#include "nopain/sdot.hpp"

namespace nopain {

enum class PairSelection {
  kMaxAngle,        // widest exceeding neighbour
  kFirstExceeding,  // highest-ranked exceeding neighbour
};

/// Quantity compared against tau.
enum class AngleCriterion {
  kRadians,    // arccos of the cosine similarity, flag when angle > tau
  kRawCosine,  // the cosine similarity itself, flag when cos_sim > tau
};

struct BoundaryConfig {
  std::size_t k = 11;
  double tau = 1.6;
  std::size_t max_probe_attempts = 1000;
  PairSelection pair_selection = PairSelection::kMaxAngle;
  AngleCriterion criterion = AngleCriterion::kRadians;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  /// Requires 0 < k < n, a finite tau and at least one probe attempt.
  /// tau outside (0, pi) is legal; it just selects everything or nothing.
  void validate(std::size_t n) const;
};

struct NeighborRanking {
  std::size_t anchor = 0;
  double anchor_value = 0.0;
  std::vector<double> probe;
  std::vector<std::size_t> neighbors;  // descending hyperplane value
  std::vector<double> values;
};

struct PairAngle {
  double cos_sim;
  double angle;  // radians in [0, pi]
};

struct SingularPair {
  std::size_t i = 0;
  std::size_t neighbor = 0;
  double angle = 0.0;
  double cos_sim = 0.0;
  std::vector<double> probe;
};

struct DetectionSummary {
  std::size_t anchors = 0;
  std::size_t pairs = 0;
  std::size_t no_exceeding_angle = 0;
  std::size_t probe_exhausted = 0;
  std::size_t zero_vector = 0;  // anchor feature is the zero vector
};

struct Detection {
  std::vector<SingularPair> pairs;  // anchor order, at most one per anchor
  DetectionSummary summary;
};

/// Cosine similarity and its arccos. Throws ZeroVector if either input is
/// zero, DimensionMismatch on unequal lengths.
PairAngle pair_angle(std::span<const double> a, std::span<const double> b);

/// A point of cell i. Prefers a uniformly chosen cached member of the cell
/// (re-checked against h), else rejection-samples standard normals. The
/// draws come from derive_seed(cfg.seed, {stream::kProbe, i}).
///
/// Throws ProbeExhausted when max_probe_attempts fresh draws all miss.
std::vector<double> probe_cell(const FeatureSet& fs, const HeightVector& h,
                               std::size_t i, const CellStatistics& stats,
                               const BoundaryConfig& cfg);

/// Sorts every hyperplane value at x in descending order (lowest index
/// first on ties); rank 0 is the anchor, ranks 1..k are returned.
NeighborRanking rank_neighbors(const FeatureSet& fs, const HeightVector& h,
                               std::span<const double> x, std::size_t k);

/// One probe, one ranking and at most one flagged pair per anchor.
Detection detect_singular_pairs(const FeatureSet& fs, const HeightVector& h,
                                const CellStatistics& stats,
                                const BoundaryConfig& cfg);

}  // namespace nopain
