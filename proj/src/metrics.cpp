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

#include "nopain/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "nopain/error.hpp"
#include "nopain/parallel.hpp"

namespace nopain {

namespace {

// Mean over p in `from` of the (squared) distance to the nearest q in `to`.
double directed(const PointCloud& from, const PointCloud& to, bool squared) {
  const std::size_t m = to.size();
  const double* q = to.points.data();
  double total = 0.0;
  for (std::size_t a = 0; a < from.size(); ++a) {
    const auto p = from.point(a);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < m; ++b) {
      const double dx = p[0] - q[3 * b];
      const double dy = p[1] - q[3 * b + 1];
      const double dz = p[2] - q[3 * b + 2];
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    total += squared ? best : std::sqrt(best);
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

ChamferVariant parse_chamfer_variant(std::string_view name) {
  if (name == "sq-mean") return ChamferVariant::kSquaredMean;
  if (name == "mean") return ChamferVariant::kMean;
  throw InvalidArgument("unknown Chamfer variant '" + std::string(name) +
                        "' (expected sq-mean or mean)");
}

std::string_view chamfer_variant_name(ChamferVariant v) {
  return v == ChamferVariant::kSquaredMean ? "sq-mean" : "mean";
}

double chamfer_distance(const PointCloud& a, const PointCloud& b,
                        ChamferVariant variant) {
  a.validate();
  b.validate();
  const bool squared = variant == ChamferVariant::kSquaredMean;
  return directed(a, b, squared) + directed(b, a, squared);
}

BatchChamfer batch_cd(std::span<const CloudPair> pairs, ChamferVariant variant,
                      std::size_t threads) {
  if (pairs.empty()) throw InvalidArgument("batch_cd: no cloud pairs");
  BatchChamfer out;
  out.per_pair.resize(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    out.per_pair[p] =
        chamfer_distance(pairs[p].original, pairs[p].adversarial, variant);
  });
  double sum = 0.0;
  for (double v : out.per_pair) sum += v;
  out.mean = sum / static_cast<double>(pairs.size());
  return out;
}

void write_batch_cd(const BatchChamfer& cd, std::ostream& out) {
  out << "pair,chamfer\n";
  char line[64];
  for (std::size_t p = 0; p < cd.per_pair.size(); ++p) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", p, cd.per_pair[p]);
    out << line;
  }
}

}  // namespace nopain
