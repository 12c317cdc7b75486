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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nopain/boundary.hpp"
#include "nopain/metrics.hpp"
#include "nopain/sdot.hpp"

namespace nopain {

struct SynthSettings {
  std::size_t modes = 2;
  std::size_t n = 200;
  std::size_t dim = 8;
  double separation = 4.0;
  double stddev = 1.0;
  std::uint64_t seed = 0;
};

struct AttackSettings {
  std::size_t samples = 0;  // re-estimation batch; 0 selects 10 * N
  bool resample = false;    // ignore a supplied cell cache
  bool allow_unconverged = false;
};

/// Every tunable of the pipeline, addressable by dotted key
/// (solver.eta, boundary.tau, ...). Unknown keys are rejected.
struct RunConfig {
  SolverConfig solver;
  BoundaryConfig boundary;
  SynthSettings synth;
  AttackSettings attack;
  ChamferVariant cd_variant = ChamferVariant::kSquaredMean;
  std::size_t threads = 0;

  /// Throws InvalidArgument for an unknown key or an unparsable value.
  void set(std::string_view key, std::string_view value);

  /// "key = value" lines; '#' starts a comment; blank lines are ignored.
  void apply_text(std::string_view text, std::string_view origin);
  void apply_file(const std::filesystem::path& path);

  /// Seeds every stage at once (solver, boundary, synth).
  void set_seed(std::uint64_t seed);

  /// All keys with their current values, sorted by key.
  std::vector<std::pair<std::string, std::string>> resolved() const;

  static std::vector<std::string> keys();
};

}  // namespace nopain
