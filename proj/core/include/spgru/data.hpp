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

// Moving-digit sequences along controlled trajectories, the deviation test
// sets built around a training trajectory, and file I/O for datasets,
// PGM previews and IDX digit images.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spgru/expfam.hpp"

namespace spgru {

enum class RenderMode { Bilinear, Snap };
enum class CompositeMode { Max, Add };

std::string_view to_string(RenderMode v);
std::string_view to_string(CompositeMode v);
RenderMode parse_render_mode(std::string_view s);
CompositeMode parse_composite_mode(std::string_view s);

struct TrajectoryConfig {
  double angle_deg = 20.0;
  double speed = 0.05;  // fraction of the frame size per frame
  double noise_b = 0.0;  // pixel noise ~ Unif(0, b), then clamped to [0, 1]
  int frame_size = 32;
  int seq_len = 20;
  int n_digits = 1;
  bool bounce = true;
  /// Fractional start of the sprite's top-left corner within [0, F - S].
  /// Absent: drawn per sequence.
  std::optional<std::array<double, 2>> start = std::array<double, 2>{0.15, 0.25};
  /// Draw angle and start per sequence instead of using the fixed values.
  bool random_trajectory = false;
  /// Digit class 0-9, or -1 to draw one per sequence.
  int digit = 3;
  /// Sprite edge in pixels; 0 picks round(frame_size * 28 / 64).
  int sprite_size = 0;
  std::uint64_t glyph_seed = 0;
  RenderMode render = RenderMode::Bilinear;
  CompositeMode composite = CompositeMode::Max;
  std::uint64_t seed = 0;

  int effective_sprite_size() const;
  void validate() const;
};

struct Sprite {
  Matrix pixels;  // S x S, values in [0, 1]
  int label = -1;
};
using SpriteSet = std::vector<Sprite>;

/// Anti-aliased stroke glyph of a digit; glyph_seed jitters the shape.
Matrix render_digit(int digit, int size, std::uint64_t glyph_seed);

struct SequenceBatch {
  int frame_h = 0;
  int frame_w = 0;
  int seq_len = 0;
  /// frames[i][t] is an (H * W) x 1 column of row-major pixels.
  std::vector<std::vector<Matrix>> frames;
  /// Realized trajectory of each sequence (angle, speed, noise, seed).
  std::vector<TrajectoryConfig> meta;

  std::size_t size() const { return frames.size(); }
  void validate() const;
};

/// Top-left sprite positions (x, y) for every frame of one trajectory.
std::vector<std::array<double, 2>> trajectory(double x0, double y0, double angle_deg, double speed,
                                              int frame_size, int sprite_size, int steps, bool bounce);

/// n sequences; sequence i draws from a stream seeded by (cfg.seed, i).
/// If sprites is non-null, digits are taken from it instead of the glyphs.
SequenceBatch generate(const TrajectoryConfig& cfg, std::size_t n, const SpriteSet* sprites = nullptr);

struct DeviationSet {
  std::string suite;  // "reference", "angle", "speed" or "noise"
  double level = 0.0;  // degrees, fraction of frame per step, or b
  TrajectoryConfig cfg;
  SequenceBatch batch;
};

/// Reference set followed by three angle (+5, +10, +15 degrees), three speed
/// (+0.5, +1.0, +1.5 % of the frame) and three noise (b = 0.2, 0.4, 0.6)
/// sets, each with `count` sequences. All sets share one generation seed, so
/// sequence i of every set has the same start, digit and noise stream.
std::vector<DeviationSet> deviation_suite(const TrajectoryConfig& train, std::size_t count = 100,
                                          const SpriteSet* sprites = nullptr);

// Dataset container:
//   "SPGRUDS\0", u32 version (1), u32 n, u32 T, u32 H, u32 W,
//   per sequence: f64 angle_deg, f64 speed, f64 noise_b, u64 seed,
//   then n * T * H * W f64 pixels (sequence, frame, row, column order).
inline constexpr std::string_view kDatasetMagic{"SPGRUDS\0", 8};
inline constexpr std::uint32_t kDatasetVersion = 1;

std::string encode_dataset(const SequenceBatch& b);
SequenceBatch decode_dataset(std::string_view bytes);
void write_dataset(const std::filesystem::path& path, const SequenceBatch& b);
SequenceBatch read_dataset(const std::filesystem::path& path);

/// 8-bit binary PGM (P5); values are scaled by 255 / scale, rounded and
/// clamped to [0, 255].
std::string encode_pgm(const Matrix& image, double scale = 1.0);
void write_pgm(const std::filesystem::path& path, const Matrix& image, double scale = 1.0);
/// H x W image from a flattened row-major column.
Matrix unflatten(const Matrix& column, int h, int w);

/// IDX images (magic 0x00000803) as sprites in [0, 1]; labels optional.
SpriteSet parse_idx(std::string_view images, std::optional<std::string_view> labels = std::nullopt);
/// Loads IDX files, keeping only sprites whose label is in `keep` when given.
/// An empty `keep` list, or one that matches nothing, is a ConfigError.
SpriteSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                   const std::optional<std::vector<int>>& keep = std::nullopt);

}  // namespace spgru
