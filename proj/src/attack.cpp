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

#include "nopain/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "nopain/parallel.hpp"

namespace nopain {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double diff = a[t] - b[t];
    s += diff * diff;
  }
  return std::sqrt(s);
}

void check_solved(const FeatureSet& fs, const HeightVector& h,
                  const CellStatistics& stats) {
  const std::size_t n = fs.count();
  auto fail = [](const std::string& why) {
    throw NotConvergedInput("attack input is not a solved decomposition: " + why);
  };
  if (h.size() != n) fail("height vector length differs from feature count");
  for (double v : h.values())
    if (!std::isfinite(v)) fail("non-finite height");
  if (stats.cell_count() != n) fail("statistics cover a different cell count");
  if (stats.dim != fs.dim()) fail("statistics have a different dimension");
  if (stats.sample_count() == 0 ||
      stats.samples.size() != stats.sample_count() * stats.dim)
    fail("no retained Monte-Carlo samples");
  const double total =
      std::accumulate(stats.frequencies.begin(), stats.frequencies.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) fail("frequencies do not sum to 1");
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<std::optional<std::vector<double>>> mass_centers(
    const CellStatistics& stats) {
  const std::size_t n = stats.cell_count();
  if (stats.centers.size() == n) return stats.centers;

  const std::size_t d = stats.dim;
  std::vector<std::size_t> counts(n, 0);
  std::vector<double> sums(n * d, 0.0);
  for (std::size_t j = 0; j < stats.sample_count(); ++j) {
    const std::size_t i = stats.assignments[j];
    if (i >= n) continue;
    ++counts[i];
    const auto x = stats.sample(j);
    for (std::size_t t = 0; t < d; ++t) sums[i * d + t] += x[t];
  }
  std::vector<std::optional<std::vector<double>>> centers(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) continue;
    std::vector<double> c(sums.begin() + i * d, sums.begin() + (i + 1) * d);
    for (double& v : c) v /= static_cast<double>(counts[i]);
    centers[i] = std::move(c);
  }
  return centers;
}

AdversarialFeature interpolate(const SingularPair& pair,
                               std::span<const double> c_i,
                               std::span<const double> c_ik,
                               std::span<const double> y_i,
                               std::span<const double> y_ik) {
  const std::size_t d = pair.probe.size();
  if (c_i.size() != d || c_ik.size() != d || y_i.size() != y_ik.size())
    throw DimensionMismatch("interpolate: inconsistent vector lengths");

  AdversarialFeature out;
  out.source_i = pair.i;
  out.source_ik = pair.neighbor;
  out.angle = pair.angle;
  out.probe = pair.probe;

  const double d_i = distance(pair.probe, c_i);
  const double d_ik = distance(pair.probe, c_ik);
  if (d_i == 0.0 || d_ik == 0.0) {
    out.degenerate_probe = true;
    if (d_i == 0.0 && d_ik == 0.0) {
      out.lambda_i = out.lambda_ik = 0.5;
    } else {
      out.lambda_i = d_i == 0.0 ? 1.0 : 0.0;
      out.lambda_ik = 1.0 - out.lambda_i;
    }
  } else {
    const double inv_i = 1.0 / d_i;
    const double inv_ik = 1.0 / d_ik;
    out.lambda_i = inv_i / (inv_i + inv_ik);
    out.lambda_ik = inv_ik / (inv_i + inv_ik);
  }

  out.vector.resize(y_i.size());
  for (std::size_t t = 0; t < y_i.size(); ++t) {
    const double v = out.lambda_i * y_i[t] + out.lambda_ik * y_ik[t];
    out.vector[t] = std::clamp(v, std::min(y_i[t], y_ik[t]),
                               std::max(y_i[t], y_ik[t]));
  }
  return out;
}

AttackResult run_attack(const FeatureSet& fs, const HeightVector& h,
                        const CellStatistics& stats, const BoundaryConfig& cfg) {
  require_min_count(fs, 2);
  check_solved(fs, h, stats);

  Detection det = detect_singular_pairs(fs, h, stats, cfg);
  const auto centers = mass_centers(stats);

  AttackResult result;
  AttackSummary& s = result.summary;
  s.anchors = det.summary.anchors;
  s.pairs_found = det.summary.pairs;
  s.skipped_no_exceeding_angle = det.summary.no_exceeding_angle;
  s.skipped_probe_exhausted = det.summary.probe_exhausted;
  s.skipped_zero_vector = det.summary.zero_vector;

  std::vector<std::optional<AdversarialFeature>> slots(det.pairs.size());
  parallel_for(det.pairs.size(), cfg.threads, [&](std::size_t p) {
    const SingularPair& pair = det.pairs[p];
    const auto& c_i = centers[pair.i];
    const auto& c_ik = centers[pair.neighbor];
    if (!c_i || !c_ik) return;
    slots[p] = interpolate(pair, *c_i, *c_ik, fs.row(pair.i), fs.row(pair.neighbor));
  });

  std::vector<double> angles;
  for (auto& slot : slots) {
    if (!slot) {
      ++s.skipped_missing_center;
      continue;
    }
    if (slot->degenerate_probe) ++s.degenerate_probes;
    angles.push_back(slot->angle);
    result.features.push_back(std::move(*slot));
  }
  s.emitted = result.features.size();
  if (!angles.empty()) {
    std::sort(angles.begin(), angles.end());
    s.angle_quantiles = std::array<double, 5>{
        angles.front(), quantile(angles, 0.25), quantile(angles, 0.5),
        quantile(angles, 0.75), angles.back()};
  }
  result.pairs = std::move(det.pairs);
  return result;
}

FeatureSet adversarial_feature_set(std::span<const AdversarialFeature> features,
                                   std::size_t dim) {
  std::vector<double> values;
  values.reserve(features.size() * dim);
  for (const auto& f : features) {
    if (f.vector.size() != dim)
      throw DimensionMismatch("adversarial feature has the wrong dimension");
    values.insert(values.end(), f.vector.begin(), f.vector.end());
  }
  return FeatureSet(features.size(), dim, std::move(values), std::nullopt,
                    "adversarial");
}

void write_attack_manifest(std::span<const AdversarialFeature> features,
                           std::ostream& out) {
  out << "anchor,neighbor,lambda_i,lambda_ik,angle_rad\n";
  char line[160];
  for (const auto& f : features) {
    std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g,%.17g\n", f.source_i,
                  f.source_ik, f.lambda_i, f.lambda_ik, f.angle);
    out << line;
  }
}

void write_singular_pairs(std::span<const SingularPair> pairs, std::size_t dim,
                          std::ostream& out) {
  out << "anchor,neighbor,cos_sim,angle_rad,probe_file_offset\n";
  char line[160];
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::size_t offset = kNpftHeaderSize + p * dim * sizeof(double);
    std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g,%zu\n", pairs[p].i,
                  pairs[p].neighbor, pairs[p].cos_sim, pairs[p].angle, offset);
    out << line;
  }
}

FeatureSet probe_feature_set(std::span<const SingularPair> pairs,
                             std::size_t dim) {
  std::vector<double> values;
  values.reserve(pairs.size() * dim);
  for (const auto& p : pairs) values.insert(values.end(), p.probe.begin(), p.probe.end());
  return FeatureSet(pairs.size(), dim, std::move(values), std::nullopt, "probes");
}

void write_attack_summary(const AttackSummary& s, std::ostream& out) {
  out << "anchors: " << s.anchors << "\n"
      << "pairs_found: " << s.pairs_found << "\n"
      << "emitted: " << s.emitted << "\n"
      << "skipped_no_exceeding_angle: " << s.skipped_no_exceeding_angle << "\n"
      << "skipped_probe_exhausted: " << s.skipped_probe_exhausted << "\n"
      << "skipped_missing_center: " << s.skipped_missing_center << "\n"
      << "skipped_zero_vector: " << s.skipped_zero_vector << "\n"
      << "degenerate_probes: " << s.degenerate_probes << "\n";
  if (s.angle_quantiles) {
    const auto& q = *s.angle_quantiles;
    char line[200];
    std::snprintf(line, sizeof line,
                  "angle_quantiles: min=%.6f q25=%.6f median=%.6f q75=%.6f max=%.6f\n",
                  q[0], q[1], q[2], q[3], q[4]);
    out << line;
  } else {
    out << "angle_quantiles: none\n";
  }
}

}  // namespace nopain
