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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "nopain/attack.hpp"
#include "nopain/error.hpp"

namespace nopain {
namespace {

struct Solved {
  FeatureSet fs;
  SolveResult res;
};

const Solved& solved_two_modes() {
  static const Solved s = [] {
    FeatureSet fs = synth_mixture(axis_mixture(2, 4, 10.0, 0.5, 31), 40, 4);
    SolverConfig cfg;
    cfg.seed = 31;
    SolveResult r = solve(fs, cfg);
    return Solved{std::move(fs), std::move(r)};
  }();
  return s;
}

SingularPair pair_at(std::vector<double> probe) {
  SingularPair p;
  p.i = 0;
  p.neighbor = 1;
  p.angle = 2.0;
  p.probe = std::move(probe);
  return p;
}

TEST(MassCentersTest, AveragesMembersAndSkipsEmptyCells) {
  CellStatistics stats;
  stats.dim = 2;
  stats.frequencies = {1.0, 0.0};
  stats.samples = {1, 0, 3, 0};
  stats.assignments = {0, 0};
  const auto c = mass_centers(stats);
  ASSERT_TRUE(c[0]);
  EXPECT_EQ(*c[0], (std::vector<double>{2.0, 0.0}));
  EXPECT_FALSE(c[1]);
}

TEST(MassCentersTest, CentersLieInTheirCells) {
  const auto& s = solved_two_modes();
  const auto centers = mass_centers(s.res.stats);
  std::size_t present = 0, inside = 0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (!centers[i]) continue;
    ++present;
    if (assign_cell(s.fs, s.res.heights, *centers[i]) == i) ++inside;
  }
  ASSERT_GT(present, 0u);
  EXPECT_GE(static_cast<double>(inside), 0.95 * static_cast<double>(present));
}

TEST(InterpolateTest, EquidistantProbeIsExactMidpointWeights) {
  const std::vector<double> c_i = {-1, 0}, c_ik = {1, 0};
  const std::vector<double> y_i = {2, 0, 4}, y_ik = {0, 2, 0};
  const auto f = interpolate(pair_at({0, 5}), c_i, c_ik, y_i, y_ik);
  EXPECT_EQ(f.lambda_i, 0.5);
  EXPECT_EQ(f.lambda_ik, 0.5);
  EXPECT_EQ(f.vector, (std::vector<double>{1, 1, 2}));
  EXPECT_FALSE(f.degenerate_probe);
}

TEST(InterpolateTest, CloserCentreGetsMoreWeight) {
  const std::vector<double> c_i = {0.0}, c_ik = {4.0};
  const std::vector<double> y_i = {1.0}, y_ik = {0.0};
  const auto f = interpolate(pair_at({1.0}), c_i, c_ik, y_i, y_ik);
  EXPECT_NEAR(f.lambda_i, 0.75, 1e-15);
  EXPECT_NEAR(f.lambda_ik, 0.25, 1e-15);
  EXPECT_NEAR(f.vector[0], 0.75, 1e-15);
}

TEST(InterpolateTest, WeightMonotoneAlongSegment) {
  const std::vector<double> c_i = {0.0, 0.0}, c_ik = {1.0, 0.0};
  const std::vector<double> y_i = {1.0, 0.0}, y_ik = {0.0, 1.0};
  double prev = 2.0;
  for (int s = 1; s < 100; ++s) {
    const double t = s / 100.0;
    const auto f = interpolate(pair_at({t, 0.0}), c_i, c_ik, y_i, y_ik);
    EXPECT_LT(f.lambda_i, prev);
    prev = f.lambda_i;
  }
}

TEST(InterpolateTest, ProbeOnCentreIsDegenerate) {
  const std::vector<double> c_i = {0.5, 0.5}, c_ik = {2.0, 0.0};
  const std::vector<double> y_i = {3.0}, y_ik = {-3.0};
  const auto f = interpolate(pair_at({0.5, 0.5}), c_i, c_ik, y_i, y_ik);
  EXPECT_TRUE(f.degenerate_probe);
  EXPECT_EQ(f.lambda_i, 1.0);
  EXPECT_EQ(f.lambda_ik, 0.0);
  EXPECT_EQ(f.vector, y_i);
}

TEST(InterpolateTest, RandomPropertyConvexCombination) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + trial % 9, feat = 1 + trial % 13;
    std::vector<double> probe(d), c_i(d), c_ik(d), y_i(feat), y_ik(feat);
    for (auto* v : {&probe, &c_i, &c_ik, &y_i, &y_ik})
      for (auto& x : *v) x = z(gen);
    const auto f = interpolate(pair_at(probe), c_i, c_ik, y_i, y_ik);
    ASSERT_NEAR(f.lambda_i + f.lambda_ik, 1.0, 1e-12);
    ASSERT_GE(f.lambda_i, 0.0);
    ASSERT_GE(f.lambda_ik, 0.0);
    for (std::size_t t = 0; t < feat; ++t) {
      ASSERT_GE(f.vector[t], std::min(y_i[t], y_ik[t]));
      ASSERT_LE(f.vector[t], std::max(y_i[t], y_ik[t]));
    }
  }
}

TEST(RunAttackTest, EmitsCrossModeConvexFeatures) {
  const auto& s = solved_two_modes();
  BoundaryConfig cfg;
  cfg.tau = 1.0;
  cfg.seed = 2;
  const auto res = run_attack(s.fs, s.res.heights, s.res.stats, cfg);
  const auto& labels = *s.fs.labels();
  ASSERT_GT(res.features.size(), 0u);
  EXPECT_EQ(res.summary.emitted, res.features.size());
  EXPECT_EQ(res.summary.pairs_found, res.pairs.size());
  EXPECT_EQ(res.summary.emitted + res.summary.skipped_missing_center, res.pairs.size());
  EXPECT_EQ(res.summary.pairs_found + res.summary.skipped_no_exceeding_angle +
                res.summary.skipped_probe_exhausted + res.summary.skipped_zero_vector,
            s.fs.count());
  for (const auto& f : res.features) {
    EXPECT_NE(labels[f.source_i], labels[f.source_ik]);
    EXPECT_NEAR(f.lambda_i + f.lambda_ik, 1.0, 1e-12);
    for (std::size_t t = 0; t < s.fs.dim(); ++t) {
      const double a = s.fs.row(f.source_i)[t], b = s.fs.row(f.source_ik)[t];
      EXPECT_GE(f.vector[t], std::min(a, b));
      EXPECT_LE(f.vector[t], std::max(a, b));
    }
  }
  ASSERT_TRUE(res.summary.angle_quantiles);
  const auto& q = *res.summary.angle_quantiles;
  for (int m = 1; m < 5; ++m) EXPECT_LE(q[m - 1], q[m]);
  EXPECT_GT(q[0], 1.0);
}

TEST(RunAttackTest, ThresholdNearPiEmitsNothing) {
  const auto& s = solved_two_modes();
  BoundaryConfig cfg;
  cfg.tau = 3.1;
  const auto res = run_attack(s.fs, s.res.heights, s.res.stats, cfg);
  EXPECT_TRUE(res.features.empty());
  EXPECT_FALSE(res.summary.angle_quantiles);
  EXPECT_EQ(res.summary.skipped_no_exceeding_angle + res.summary.skipped_probe_exhausted,
            s.fs.count());
}

TEST(RunAttackTest, Deterministic) {
  const auto& s = solved_two_modes();
  BoundaryConfig cfg;
  cfg.tau = 1.0;
  cfg.seed = 3;
  const auto a = run_attack(s.fs, s.res.heights, s.res.stats, cfg);
  cfg.threads = 3;
  const auto b = run_attack(s.fs, s.res.heights, s.res.stats, cfg);
  EXPECT_EQ(encode_features(adversarial_feature_set(a.features, s.fs.dim())),
            encode_features(adversarial_feature_set(b.features, s.fs.dim())));
}

TEST(RunAttackTest, RejectsUnsolvedInput) {
  const auto& s = solved_two_modes();
  BoundaryConfig cfg;
  EXPECT_THROW(run_attack(s.fs, HeightVector(3), s.res.stats, cfg), NotConvergedInput);
  HeightVector bad = s.res.heights;
  bad[0] = std::nan("");
  EXPECT_THROW(run_attack(s.fs, bad, s.res.stats, cfg), NotConvergedInput);
  CellStatistics empty;
  EXPECT_THROW(run_attack(s.fs, s.res.heights, empty, cfg), NotConvergedInput);
  CellStatistics skewed = s.res.stats;
  skewed.frequencies[0] += 0.5;
  EXPECT_THROW(run_attack(s.fs, s.res.heights, skewed, cfg), NotConvergedInput);
}

TEST(AttackOutputTest, ManifestAndPairsCsv) {
  const auto& s = solved_two_modes();
  BoundaryConfig cfg;
  cfg.tau = 1.0;
  const auto res = run_attack(s.fs, s.res.heights, s.res.stats, cfg);

  std::ostringstream manifest, pairs;
  write_attack_manifest(res.features, manifest);
  write_singular_pairs(res.pairs, s.fs.dim(), pairs);
  std::istringstream m(manifest.str()), p(pairs.str());
  std::string line;
  std::getline(m, line);
  EXPECT_EQ(line, "anchor,neighbor,lambda_i,lambda_ik,angle_rad");
  std::size_t rows = 0;
  while (std::getline(m, line)) ++rows;
  EXPECT_EQ(rows, res.features.size());

  std::getline(p, line);
  EXPECT_EQ(line, "anchor,neighbor,cos_sim,angle_rad,probe_file_offset");
  const FeatureSet probes = probe_feature_set(res.pairs, s.fs.dim());
  const auto bytes = encode_features(probes);
  for (std::size_t k = 0; std::getline(p, line); ++k) {
    const auto offset = std::stoull(line.substr(line.rfind(',') + 1));
    // The offset addresses the probe's first coordinate inside the file.
    double first;
    std::memcpy(&first, bytes.data() + offset, sizeof first);
    EXPECT_EQ(first, res.pairs[k].probe[0]);
  }
}

}  // namespace
}  // namespace nopain
