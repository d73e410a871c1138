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

// Versioned binary checkpoint:
//
//   "SPGRUCKP"   8-byte magic
//   u32          format version (1)
//   u32 H, u32 D, u32 family
//   u64          FNV-1a hash of the canonical model config
//   str          canonical model config
//   str          free-form metadata (key=value lines)
//   u32          array count, then per array: str name, u32 rows, u32 cols,
//                row-major f64 values
//
// All integers and floats are little-endian; str is a u32 length plus bytes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spgru/network.hpp"

namespace spgru {

inline constexpr std::string_view kCheckpointMagic = "SPGRUCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  NetworkConfig config;
  Family family = Family::Gaussian;
  NetworkParams params;
  std::string meta;
  /// Arrays that are not model parameters (optimizer state), in file order.
  std::vector<NamedArray> extra;

  const Matrix* find_extra(std::string_view name) const;
};

/// Inverse of NetworkConfig::canonical().
NetworkConfig parse_canonical_config(std::string_view text);

std::string encode_checkpoint(const Checkpoint& c);
/// Throws FormatError on malformed input, ShapeError on arrays that do not
/// match the stored config.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spgru
