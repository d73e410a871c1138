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

// Subcommands behind the spgru executable. Each returns a process exit code
// and reports errors on the given error stream.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace spgru {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;  // configuration or usage error
inline constexpr int kExitIo = 2;
inline constexpr int kExitVerify = 3;  // an oracle check failed

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  /// Falls back to SPGRU_THREADS, then to the config.
  std::optional<int> threads;
  /// Model to evaluate or export; for train, a checkpoint to resume from.
  std::optional<std::filesystem::path> checkpoint;
  /// eval-deviation: angle, speed, noise or all; oracle: comma-separated.
  std::optional<std::string> suite;
  /// oracle: samples per check.
  std::optional<std::size_t> samples;
};

int cmd_train(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_eval_deviation(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_export_maps(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_oracle(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_generate(const CommandOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace spgru
