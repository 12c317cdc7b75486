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

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace nopain {

/// SplitMix64 finalizer. Used only to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives a substream seed from a root seed and a path of tags.
///
/// Splitting rule: s = splitmix64(root); for each tag t, s = splitmix64(s ^ t).
/// Every parallel chunk, epoch and anchor draws from its own substream, so
/// the values drawn never depend on how work is scheduled.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t t : path) s = splitmix64(s ^ t);
  return s;
}

/// Stream tags. Changing any of these changes every seeded output.
namespace stream {
inline constexpr std::uint64_t kMixture = 0x4D49580000000001ULL;
inline constexpr std::uint64_t kTrainBatch = 0x5452414E00000002ULL;
inline constexpr std::uint64_t kEvalBatch = 0x4556414C00000003ULL;
inline constexpr std::uint64_t kProbe = 0x50524F4200000004ULL;
inline constexpr std::uint64_t kChunk = 0x43484E4B00000005ULL;
}  // namespace stream

/// Seeded generator with build-independent variates.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniforms take the top 53 bits; normals use the Box-Muller
/// transform (cos branch first, sin branch cached for the next call).
/// std::normal_distribution is not used because its algorithm is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace nopain
