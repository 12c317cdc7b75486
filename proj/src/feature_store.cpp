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

#include "nopain/feature_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "byte_io.hpp"
#include "nopain/error.hpp"
#include "nopain/random.hpp"

namespace nopain {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kFlagLabels = 0x01;

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k]))
      throw NonFiniteData(std::string(what) + ": non-finite value at flat index " +
                          std::to_string(k));
  }
}

std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

FeatureSet load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::size_t cols = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = body.find(',', start);
      const std::string_view field =
          trim(body.substr(start, comma == std::string_view::npos
                                      ? std::string_view::npos
                                      : comma - start));
      double v = 0.0;
      const auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() ||
          ptr != field.data() + field.size())
        throw MalformedFile("csv: unparsable field on line " +
                            std::to_string(line_no));
      values.push_back(v);
      ++cols;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      dim = cols;
    } else if (cols != dim) {
      throw DimensionMismatch("csv: line " + std::to_string(line_no) + " has " +
                              std::to_string(cols) + " columns, expected " +
                              std::to_string(dim));
    }
    ++rows;
  }
  if (rows == 0) throw MalformedFile("csv: no rows in " + path.string());
  return FeatureSet(rows, dim, std::move(values), std::nullopt, "csv-import");
}

}  // namespace

FeatureSet::FeatureSet(std::size_t count, std::size_t dim,
                       std::vector<double> values,
                       std::optional<std::vector<std::int64_t>> labels,
                       std::string source_tag)
    : count_(count),
      dim_(dim),
      values_(std::move(values)),
      labels_(std::move(labels)),
      source_tag_(std::move(source_tag)) {
  if (count_ == 0 || dim_ == 0)
    throw InvalidArgument("FeatureSet: count and dim must be positive");
  if (values_.size() / dim_ != count_ || values_.size() % dim_ != 0)
    throw DimensionMismatch("FeatureSet: " + std::to_string(values_.size()) +
                            " values do not form " + std::to_string(count_) +
                            " rows of dimension " + std::to_string(dim_));
  if (labels_ && labels_->size() != count_)
    throw DimensionMismatch("FeatureSet: label count differs from row count");
  require_finite(values_, "FeatureSet");
}

void require_min_count(const FeatureSet& fs, std::size_t minimum) {
  if (fs.count() < minimum)
    throw InvalidArgument("feature set has " + std::to_string(fs.count()) +
                          " vectors; at least " + std::to_string(minimum) +
                          " are required");
}

void PointCloud::validate() const {
  if (points.empty()) throw EmptyCloud("point cloud '" + name + "' is empty");
  if (points.size() % 3 != 0)
    throw DimensionMismatch("point cloud '" + name +
                            "' is not a list of 3-D points");
  require_finite(points, "PointCloud");
}

void MixtureSpec::validate(std::size_t dim) const {
  if (modes.empty()) throw InvalidSpec("mixture needs at least one mode");
  double total = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto& mode = modes[m];
    const std::string tag = "mode " + std::to_string(m);
    if (mode.mean.size() != dim)
      throw InvalidSpec(tag + ": mean has dimension " +
                        std::to_string(mode.mean.size()) + ", expected " +
                        std::to_string(dim));
    if (!(mode.stddev > 0.0) || !std::isfinite(mode.stddev))
      throw InvalidSpec(tag + ": stddev must be positive");
    if (!(mode.weight > 0.0) || !std::isfinite(mode.weight))
      throw InvalidSpec(tag + ": weight must be positive");
    for (double v : mode.mean)
      if (!std::isfinite(v)) throw InvalidSpec(tag + ": mean is not finite");
    total += mode.weight;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidSpec("mixture weights sum to " + std::to_string(total));
}

MixtureSpec axis_mixture(std::size_t modes, std::size_t dim, double separation,
                         double stddev, std::uint64_t seed) {
  if (modes == 0) throw InvalidSpec("mixture needs at least one mode");
  if (dim == 0) throw InvalidSpec("dimension must be positive");
  if (modes > 2 * dim)
    throw InvalidSpec("axis mixture supports at most 2*dim = " +
                      std::to_string(2 * dim) + " modes");
  MixtureSpec spec;
  spec.seed = seed;
  for (std::size_t m = 0; m < modes; ++m) {
    MixtureMode mode;
    mode.mean.assign(dim, 0.0);
    mode.mean[m % dim] = m < dim ? separation : -separation;
    mode.stddev = stddev;
    mode.weight = 1.0 / static_cast<double>(modes);
    spec.modes.push_back(std::move(mode));
  }
  // 1/modes summed may miss 1 by an ulp or two; fold the residue into mode 0.
  double total = 0.0;
  for (const auto& mode : spec.modes) total += mode.weight;
  spec.modes.front().weight += 1.0 - total;
  return spec;
}

FeatureSet synth_mixture(const MixtureSpec& spec, std::size_t n,
                         std::size_t dim) {
  if (dim == 0) throw InvalidSpec("dimension must be positive");
  spec.validate(dim);
  const std::size_t modes = spec.modes.size();
  if (n < modes)
    throw InvalidSpec("n = " + std::to_string(n) + " is smaller than the " +
                      std::to_string(modes) + " modes");

  // Largest remainder apportionment.
  std::vector<std::size_t> sizes(modes);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t m = 0; m < modes; ++m) {
    const double exact = spec.modes[m].weight * static_cast<double>(n);
    sizes[m] = static_cast<std::size_t>(std::floor(exact));
    assigned += sizes[m];
    remainders.emplace_back(exact - std::floor(exact), m);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned)
    ++sizes[remainders[k % modes].second];

  Rng rng(derive_seed(spec.seed, {stream::kMixture}));
  std::vector<double> values;
  values.reserve(n * dim);
  std::vector<std::int64_t> labels;
  labels.reserve(n);
  for (std::size_t m = 0; m < modes; ++m) {
    const auto& mode = spec.modes[m];
    for (std::size_t j = 0; j < sizes[m]; ++j) {
      for (std::size_t t = 0; t < dim; ++t)
        values.push_back(mode.mean[t] + mode.stddev * rng.normal());
      labels.push_back(static_cast<std::int64_t>(m));
    }
  }
  return FeatureSet(n, dim, std::move(values), std::move(labels),
                    "synthetic-mixture");
}

std::vector<std::uint8_t> encode_features(const FeatureSet& fs) {
  detail::ByteWriter w;
  w.magic("NPFT");
  w.u32(kFormatVersion);
  w.u8(fs.labels() ? kFlagLabels : 0);
  w.u64(fs.count());
  w.u64(fs.dim());
  for (double v : fs.values()) w.f64(v);
  if (fs.labels())
    for (std::int64_t l : *fs.labels()) w.i64(l);
  return w.take();
}

FeatureSet decode_features(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "NPFT");
  r.expect_magic("NPFT");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw MalformedFile("NPFT: unsupported version " + std::to_string(version));
  const std::uint8_t flags = r.u8();
  if (flags & ~kFlagLabels)
    throw MalformedFile("NPFT: unknown flag bits set");
  const bool has_labels = flags & kFlagLabels;
  const std::uint64_t count = r.u64();
  const std::uint64_t dim = r.u64();
  if (count == 0 || dim == 0) throw MalformedFile("NPFT: empty shape");

  if (!detail::payload_fits(count, dim, 8, r.remaining()))
    throw MalformedFile("NPFT: payload shorter than N*d*8 bytes");
  const std::uint64_t expected =
      count * dim * 8 + (has_labels ? count * 8 : 0);
  if (r.remaining() != expected)
    throw MalformedFile("NPFT: file length disagrees with declared shape (" +
                        std::to_string(r.remaining()) + " payload bytes, " +
                        std::to_string(expected) + " expected)");

  std::vector<double> values(count * dim);
  for (double& v : values) v = r.f64();
  std::optional<std::vector<std::int64_t>> labels;
  if (has_labels) {
    labels.emplace(count);
    for (std::int64_t& l : *labels) l = r.i64();
  }
  return FeatureSet(count, dim, std::move(values), std::move(labels),
                    "npft-file");
}

FeatureSet load_features(const std::filesystem::path& path) {
  if (lowercase_extension(path) == ".csv") return load_features_csv(path);
  return decode_features(read_file_bytes(path));
}

void save_features(const FeatureSet& fs, const std::filesystem::path& path) {
  write_file_bytes(path, encode_features(fs));
}

std::vector<std::uint8_t> encode_clouds(std::span<const PointCloud> clouds) {
  if (clouds.empty()) throw InvalidArgument("NPPC: no clouds to write");
  const std::size_t points = clouds.front().size();
  for (const auto& c : clouds) {
    c.validate();
    if (c.size() != points)
      throw DimensionMismatch("NPPC: every cloud must have the same point count");
  }
  detail::ByteWriter w;
  w.magic("NPPC");
  w.u32(kFormatVersion);
  w.u8(0);
  w.u64(clouds.size());
  w.u64(points);
  for (const auto& c : clouds)
    for (double v : c.points) w.f64(v);
  return w.take();
}

std::vector<PointCloud> decode_clouds(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "NPPC");
  r.expect_magic("NPPC");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw MalformedFile("NPPC: unsupported version " + std::to_string(version));
  if (r.u8() != 0) throw MalformedFile("NPPC: unknown flag bits set");
  const std::uint64_t count = r.u64();
  const std::uint64_t points = r.u64();
  if (count == 0 || points == 0) throw MalformedFile("NPPC: empty shape");
  if (!detail::payload_fits(count, points, 24, r.remaining()) ||
      r.remaining() != count * points * 24)
    throw MalformedFile("NPPC: file length disagrees with declared shape");

  std::vector<PointCloud> clouds(count);
  for (std::uint64_t c = 0; c < count; ++c) {
    clouds[c].name = "cloud_" + std::to_string(c);
    clouds[c].points.resize(points * 3);
    for (double& v : clouds[c].points) v = r.f64();
    clouds[c].validate();
  }
  return clouds;
}

std::vector<PointCloud> load_clouds(const std::filesystem::path& path) {
  return decode_clouds(read_file_bytes(path));
}

void save_clouds(std::span<const PointCloud> clouds,
                 const std::filesystem::path& path) {
  write_file_bytes(path, encode_clouds(clouds));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoFailure("read failed for " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoFailure("write failed for " + path.string());
}

}  // namespace nopain
