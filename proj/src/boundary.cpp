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

#include "nopain/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "nopain/parallel.hpp"
#include "nopain/random.hpp"

namespace nopain {

namespace {

// Cached sample indices grouped by cell, CSR layout.
struct CellMembers {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> indices;

  std::span<const std::size_t> of(std::size_t i) const {
    return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

CellMembers group_members(const CellStatistics& stats, std::size_t n) {
  CellMembers m;
  m.offsets.assign(n + 1, 0);
  for (std::size_t a : stats.assignments)
    if (a < n) ++m.offsets[a + 1];
  std::partial_sum(m.offsets.begin(), m.offsets.end(), m.offsets.begin());
  m.indices.resize(m.offsets[n]);
  std::vector<std::size_t> fill(m.offsets.begin(), m.offsets.end() - 1);
  for (std::size_t j = 0; j < stats.assignments.size(); ++j) {
    const std::size_t a = stats.assignments[j];
    if (a < n) m.indices[fill[a]++] = j;
  }
  return m;
}

bool cache_usable(const FeatureSet& fs, const CellStatistics& stats) {
  return stats.dim == fs.dim() &&
         stats.samples.size() == stats.assignments.size() * stats.dim;
}

std::vector<double> probe_from(const FeatureSet& fs, const HeightVector& h,
                               std::size_t i, const CellStatistics& stats,
                               std::span<const std::size_t> members,
                               const BoundaryConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, {stream::kProbe, i}));
  if (!members.empty()) {
    const auto x = stats.sample(members[rng.below(members.size())]);
    // Stale caches (statistics from other heights) fall through to sampling.
    if (assign_cell(fs, h, x) == i) return {x.begin(), x.end()};
  }
  std::vector<double> x(fs.dim());
  for (std::size_t attempt = 0; attempt < cfg.max_probe_attempts; ++attempt) {
    rng.fill_normal(x);
    if (assign_cell(fs, h, x) == i) return x;
  }
  throw ProbeExhausted("cell " + std::to_string(i) + " not hit in " +
                       std::to_string(cfg.max_probe_attempts) + " draws");
}

bool exceeds(const PairAngle& a, const BoundaryConfig& cfg) {
  return cfg.criterion == AngleCriterion::kRadians ? a.angle > cfg.tau
                                                   : a.cos_sim > cfg.tau;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

enum class AnchorOutcome { kPair, kNoExceeding, kExhausted, kZeroVector };

}  // namespace

void BoundaryConfig::validate(std::size_t n) const {
  if (k == 0 || k >= n)
    throw InvalidArgument("boundary config: k = " + std::to_string(k) +
                          " must satisfy 0 < k < N = " + std::to_string(n));
  if (!std::isfinite(tau)) throw InvalidArgument("boundary config: tau is not finite");
  if (max_probe_attempts == 0)
    throw InvalidArgument("boundary config: max_probe_attempts must be positive");
}

PairAngle pair_angle(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionMismatch("pair_angle: vectors differ in dimension");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw ZeroVector("pair_angle: zero vector");
  double dot = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) dot += a[t] * b[t];
  const double cos_sim = dot / (na * nb);
  return {cos_sim, std::acos(std::clamp(cos_sim, -1.0, 1.0))};
}

std::vector<double> probe_cell(const FeatureSet& fs, const HeightVector& h,
                               std::size_t i, const CellStatistics& stats,
                               const BoundaryConfig& cfg) {
  if (i >= fs.count())
    throw InvalidArgument("cell index " + std::to_string(i) + " out of range");
  if (h.size() != fs.count())
    throw DimensionMismatch("height vector not aligned with features");
  std::vector<std::size_t> members;
  if (cache_usable(fs, stats)) {
    for (std::size_t j = 0; j < stats.assignments.size(); ++j)
      if (stats.assignments[j] == i) members.push_back(j);
  }
  return probe_from(fs, h, i, stats, members, cfg);
}

NeighborRanking rank_neighbors(const FeatureSet& fs, const HeightVector& h,
                               std::span<const double> x, std::size_t k) {
  const std::size_t n = fs.count();
  if (h.size() != n)
    throw DimensionMismatch("height vector not aligned with features");
  if (x.size() != fs.dim())
    throw DimensionMismatch("probe dimension differs from feature dimension");
  if (k >= n)
    throw InvalidArgument("k = " + std::to_string(k) + " must be below N = " +
                          std::to_string(n));

  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i)
    values[i] = hyperplane_value(fs.row(i), h[i], x);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });

  NeighborRanking r;
  r.anchor = order[0];
  r.anchor_value = values[order[0]];
  r.probe.assign(x.begin(), x.end());
  r.neighbors.assign(order.begin() + 1, order.begin() + static_cast<std::ptrdiff_t>(k + 1));
  r.values.reserve(k);
  for (std::size_t idx : r.neighbors) r.values.push_back(values[idx]);
  return r;
}

Detection detect_singular_pairs(const FeatureSet& fs, const HeightVector& h,
                                const CellStatistics& stats,
                                const BoundaryConfig& cfg) {
  const std::size_t n = fs.count();
  require_min_count(fs, 2);
  cfg.validate(n);
  if (h.size() != n)
    throw DimensionMismatch("height vector not aligned with features");

  const CellMembers members =
      cache_usable(fs, stats) ? group_members(stats, n) : CellMembers{};
  const bool have_members = !members.offsets.empty();

  std::vector<AnchorOutcome> outcome(n, AnchorOutcome::kNoExceeding);
  std::vector<std::optional<SingularPair>> found(n);

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const auto y_i = fs.row(i);
    if (norm(y_i) == 0.0) {
      outcome[i] = AnchorOutcome::kZeroVector;
      return;
    }
    std::vector<double> x;
    try {
      x = probe_from(fs, h, i, stats,
                     have_members ? members.of(i) : std::span<const std::size_t>{},
                     cfg);
    } catch (const ProbeExhausted&) {
      outcome[i] = AnchorOutcome::kExhausted;
      return;
    }
    const NeighborRanking ranking = rank_neighbors(fs, h, x, cfg.k);

    std::optional<SingularPair> pick;
    for (std::size_t neighbor : ranking.neighbors) {
      const auto y_k = fs.row(neighbor);
      if (norm(y_k) == 0.0) continue;
      const PairAngle a = pair_angle(y_i, y_k);
      if (!exceeds(a, cfg)) continue;
      if (!pick || a.angle > pick->angle) pick = SingularPair{i, neighbor, a.angle, a.cos_sim, {}};
      if (cfg.pair_selection == PairSelection::kFirstExceeding) break;
    }
    if (pick) {
      pick->probe = std::move(x);
      found[i] = std::move(pick);
      outcome[i] = AnchorOutcome::kPair;
    }
  });

  Detection det;
  det.summary.anchors = n;
  for (std::size_t i = 0; i < n; ++i) {
    switch (outcome[i]) {
      case AnchorOutcome::kPair:
        det.pairs.push_back(std::move(*found[i]));
        break;
      case AnchorOutcome::kNoExceeding:
        ++det.summary.no_exceeding_angle;
        break;
      case AnchorOutcome::kExhausted:
        ++det.summary.probe_exhausted;
        break;
      case AnchorOutcome::kZeroVector:
        ++det.summary.zero_vector;
        break;
    }
  }
  det.summary.pairs = det.pairs.size();
  return det;
}

}  // namespace nopain
