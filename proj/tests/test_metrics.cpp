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
#include <random>
#include <sstream>

#include "nopain/error.hpp"
#include "nopain/metrics.hpp"
#include "oracles.hpp"

namespace nopain {
namespace {

PointCloud random_cloud(std::mt19937_64& gen, std::size_t p) {
  std::normal_distribution<double> z;
  PointCloud c;
  c.points.resize(3 * p);
  for (auto& v : c.points) v = z(gen);
  return c;
}

TEST(ChamferTest, IdenticalCloudsAreZero) {
  std::mt19937_64 gen(1);
  const auto c = random_cloud(gen, 50);
  EXPECT_EQ(chamfer_distance(c, c), 0.0);
  EXPECT_EQ(chamfer_distance(c, c, ChamferVariant::kMean), 0.0);
}

TEST(ChamferTest, SinglePoints) {
  PointCloud a, b;
  a.points = {0, 0, 0};
  b.points = {1, 0, 0};
  EXPECT_EQ(chamfer_distance(a, b), 2.0);
  b.points = {2, 0, 0};
  EXPECT_EQ(chamfer_distance(a, b), 8.0);
  EXPECT_EQ(chamfer_distance(a, b, ChamferVariant::kMean), 4.0);
}

TEST(ChamferTest, MatchesDistanceMatrixOracle) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> size(1, 64);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_cloud(gen, size(gen));
    const auto b = random_cloud(gen, size(gen));
    for (bool squared : {true, false}) {
      const double expected = oracle::chamfer_matrix(a.points, b.points, squared);
      const double got = chamfer_distance(
          a, b, squared ? ChamferVariant::kSquaredMean : ChamferVariant::kMean);
      ASSERT_NEAR(got, expected, 1e-12 * expected);
    }
  }
}

TEST(ChamferTest, SymmetricAndTranslationInvariant) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_cloud(gen, 20 + trial);
    const auto b = random_cloud(gen, 30);
    const double ab = chamfer_distance(a, b);
    EXPECT_NEAR(ab, chamfer_distance(b, a), 1e-12 * ab);
    PointCloud sa = a, sb = b;
    for (std::size_t k = 0; k < sa.points.size(); ++k) sa.points[k] += (k % 3 == 0) ? 0.5 : -0.25;
    for (std::size_t k = 0; k < sb.points.size(); ++k) sb.points[k] += (k % 3 == 0) ? 0.5 : -0.25;
    EXPECT_NEAR(chamfer_distance(sa, sb), ab, 1e-9 * (1.0 + ab));
  }
}

TEST(ChamferTest, EmptyCloudRejected) {
  PointCloud empty, one;
  one.points = {0, 0, 0};
  EXPECT_THROW(chamfer_distance(empty, one), EmptyCloud);
  EXPECT_THROW(chamfer_distance(one, empty), EmptyCloud);
}

TEST(BatchChamferTest, MeanOfPerPairValues) {
  std::mt19937_64 gen(4);
  std::vector<CloudPair> pairs;
  for (int k = 0; k < 7; ++k) pairs.push_back({random_cloud(gen, 16), random_cloud(gen, 16)});
  const auto one = batch_cd(pairs, ChamferVariant::kSquaredMean, 1);
  const auto many = batch_cd(pairs, ChamferVariant::kSquaredMean, 4);
  EXPECT_EQ(one.per_pair, many.per_pair);
  EXPECT_EQ(one.mean, many.mean);
  double sum = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    EXPECT_EQ(one.per_pair[k], chamfer_distance(pairs[k].original, pairs[k].adversarial));
    sum += one.per_pair[k];
  }
  EXPECT_NEAR(one.mean, sum / 7.0, 1e-15 * sum);
  EXPECT_THROW(batch_cd({}), InvalidArgument);

  std::ostringstream out;
  write_batch_cd(one, out);
  EXPECT_EQ(out.str().substr(0, 13), "pair,chamfer\n");
}

TEST(ChamferVariantTest, ParseNames) {
  EXPECT_EQ(parse_chamfer_variant("sq-mean"), ChamferVariant::kSquaredMean);
  EXPECT_EQ(parse_chamfer_variant("mean"), ChamferVariant::kMean);
  EXPECT_EQ(chamfer_variant_name(ChamferVariant::kMean), "mean");
  EXPECT_THROW(parse_chamfer_variant("sum"), InvalidArgument);
}

}  // namespace
}  // namespace nopain
