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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nopain {

/// N feature vectors of dimension d, stored row-major in double precision.
///
/// Immutable after construction; the constructor enforces that every entry
/// is finite and that the value count matches count * dim. Labels are
/// metadata for tests on synthetic data and are never read by the solver
/// or the attack.
class FeatureSet {
 public:
  FeatureSet(std::size_t count, std::size_t dim, std::vector<double> values,
             std::optional<std::vector<std::int64_t>> labels = std::nullopt,
             std::string source_tag = {});

  std::size_t count() const { return count_; }
  std::size_t dim() const { return dim_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const { return values_; }

  const std::optional<std::vector<std::int64_t>>& labels() const {
    return labels_;
  }
  const std::string& source_tag() const { return source_tag_; }

  /// Equality on count, dim, values and labels. The source tag is
  /// provenance only and does not take part.
  bool operator==(const FeatureSet& other) const {
    return count_ == other.count_ && dim_ == other.dim_ &&
           values_ == other.values_ && labels_ == other.labels_;
  }

 private:
  std::size_t count_;
  std::size_t dim_;
  std::vector<double> values_;
  std::optional<std::vector<std::int64_t>> labels_;
  std::string source_tag_;
};

/// Throws InvalidArgument unless fs holds at least `minimum` vectors.
void require_min_count(const FeatureSet& fs, std::size_t minimum);

struct PointCloud {
  std::vector<double> points;  // P x 3, row-major
  std::string name;

  std::size_t size() const { return points.size() / 3; }
  std::span<const double, 3> point(std::size_t i) const {
    return std::span<const double, 3>(points.data() + 3 * i, 3);
  }
  /// Throws EmptyCloud for P = 0, NonFiniteData / DimensionMismatch otherwise.
  void validate() const;
};

struct MixtureMode {
  std::vector<double> mean;
  double stddev = 1.0;
  double weight = 1.0;
};

struct MixtureSpec {
  std::vector<MixtureMode> modes;
  std::uint64_t seed = 0;

  /// Throws InvalidSpec when a mode is malformed, weights do not sum to 1
  /// within 1e-12, or a mean does not have dimension `dim`.
  void validate(std::size_t dim) const;
};

/// Equal-weight modes with means at `separation` along the coordinate axes:
/// +e_0, +e_1, ..., +e_{d-1}, then -e_0, ..., -e_{d-1}. At most 2d modes.
MixtureSpec axis_mixture(std::size_t modes, std::size_t dim, double separation,
                         double stddev, std::uint64_t seed);

/// Draws n vectors from the mixture. Mode sizes follow the weights by the
/// largest-remainder rule (ties to the lower mode index); rows are grouped by
/// mode and labelled with the mode index. Pure function of (spec, n, dim).
FeatureSet synth_mixture(const MixtureSpec& spec, std::size_t n,
                         std::size_t dim);

// NPFT v1 feature files.
//   0..3   magic "NPFT"
//   4..7   version, u32 LE (= 1)
//   8      flags, u8 (bit 0: labels present)
//   9..16  N, u64 LE
//   17..24 d, u64 LE
//   25..   N*d f64 LE row-major, then N i64 LE labels when flagged
inline constexpr std::size_t kNpftHeaderSize = 25;

std::vector<std::uint8_t> encode_features(const FeatureSet& fs);
FeatureSet decode_features(std::span<const std::uint8_t> bytes);

/// Reads NPFT v1, or a headerless CSV (one vector per line) when the
/// extension is ".csv".
FeatureSet load_features(const std::filesystem::path& path);
void save_features(const FeatureSet& fs, const std::filesystem::path& path);

// NPPC v1 point-cloud files: the NPFT header layout with magic "NPPC",
// flags = 0, N_clouds and P_points in place of N and d, then N*P*3 f64 LE.
std::vector<std::uint8_t> encode_clouds(std::span<const PointCloud> clouds);
std::vector<PointCloud> decode_clouds(std::span<const std::uint8_t> bytes);

std::vector<PointCloud> load_clouds(const std::filesystem::path& path);
void save_clouds(std::span<const PointCloud> clouds,
                 const std::filesystem::path& path);

/// Whole-file helpers shared by every binary format in the library.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace nopain
