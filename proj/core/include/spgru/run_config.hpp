// Copyright 2026 The spgru Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration: an INI document with [model], [data], [train], [eval],
// [oracle] and [output] sections. Unknown sections or keys are rejected
// before any work starts. See docs/config.md for the grammar and keys.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spgru/data.hpp"
#include "spgru/network.hpp"
#include "spgru/training.hpp"

namespace spgru {

struct EvalConfig {
  std::vector<std::string> suites{"angle", "speed", "noise"};
  std::size_t count = 100;
  std::optional<std::filesystem::path> checkpoint;
};

struct OracleConfig {
  std::vector<std::string> suites{"lmm", "sigmoid", "tanh", "gamma", "poisson", "cell"};
  std::size_t n = 1'000'000;
  std::size_t cell_n = 100'000;
  std::uint64_t seed = 0;
};

struct IdxConfig {
  std::filesystem::path images;
  std::filesystem::path labels;
  std::optional<std::vector<int>> keep;
};

struct RunConfig {
  NetworkConfig model;
  TrajectoryConfig data;
  std::optional<IdxConfig> idx;
  TrainConfig train;
  EvalConfig eval;
  OracleConfig oracle;
  std::filesystem::path out_dir = "out";
  bool preview = false;

  /// Cross-section checks (frame size vs model input, sequence length).
  void validate() const;
};

/// Parses the document; relative paths resolve against `base_dir`.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
/// Throws IoError if unreadable, ConfigError if invalid.
RunConfig load_run_config(const std::filesystem::path& path);

/// Replaces every seed in the config (data, train, oracle).
void override_seed(RunConfig& cfg, std::uint64_t seed);

}  // namespace spgru
