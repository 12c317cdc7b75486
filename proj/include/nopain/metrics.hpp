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

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "nopain/feature_store.hpp"

namespace nopain {

enum class ChamferVariant {
  kSquaredMean,  // mean of squared nearest-neighbour distances, both ways
  kMean,         // mean of unsquared nearest-neighbour distances, both ways
};

/// Parses "sq-mean" or "mean"; throws InvalidArgument otherwise.
ChamferVariant parse_chamfer_variant(std::string_view name);
std::string_view chamfer_variant_name(ChamferVariant v);

struct CloudPair {
  PointCloud original;
  PointCloud adversarial;
};

/// Symmetric Chamfer distance by exhaustive nearest-neighbour search.
/// Throws EmptyCloud when either cloud has no points.
double chamfer_distance(const PointCloud& a, const PointCloud& b,
                        ChamferVariant variant = ChamferVariant::kSquaredMean);

struct BatchChamfer {
  double mean = 0.0;
  std::vector<double> per_pair;
};

BatchChamfer batch_cd(std::span<const CloudPair> pairs,
                      ChamferVariant variant = ChamferVariant::kSquaredMean,
                      std::size_t threads = 0);

/// "pair,chamfer" CSV.
void write_batch_cd(const BatchChamfer& cd, std::ostream& out);

}  // namespace nopain
