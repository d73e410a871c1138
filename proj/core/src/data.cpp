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

#include "spgru/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "random_util.hpp"
#include "spgru/binary_io.hpp"
#include "spgru/error.hpp"

namespace spgru {

std::string_view to_string(RenderMode v) { return v == RenderMode::Bilinear ? "bilinear" : "snap"; }
std::string_view to_string(CompositeMode v) { return v == CompositeMode::Max ? "max" : "add"; }

RenderMode parse_render_mode(std::string_view s) {
  if (s == "bilinear") return RenderMode::Bilinear;
  if (s == "snap") return RenderMode::Snap;
  throw ConfigError("unknown render mode '" + std::string(s) + "'");
}

CompositeMode parse_composite_mode(std::string_view s) {
  if (s == "max") return CompositeMode::Max;
  if (s == "add") return CompositeMode::Add;
  throw ConfigError("unknown composite mode '" + std::string(s) + "'");
}

int TrajectoryConfig::effective_sprite_size() const {
  return sprite_size > 0 ? sprite_size : static_cast<int>(std::lround(frame_size * 28.0 / 64.0));
}

void TrajectoryConfig::validate() const {
  if (!std::isfinite(angle_deg)) throw ConfigError("angle must be finite");
  if (!(speed >= 0.0) || !std::isfinite(speed)) throw ConfigError("speed must be >= 0");
  if (!(noise_b >= 0.0) || !std::isfinite(noise_b)) throw ConfigError("noise_b must be >= 0");
  if (frame_size < 1) throw ConfigError("frame_size must be >= 1");
  if (seq_len < 2) throw ConfigError("seq_len must be >= 2");
  if (n_digits < 1) throw ConfigError("n_digits must be >= 1");
  if (digit < -1 || digit > 9) throw ConfigError("digit must be in 0..9 or -1");
  if (sprite_size < 0) throw ConfigError("sprite_size must be >= 0");
  if (effective_sprite_size() > frame_size) {
    throw ConfigError("sprite (" + std::to_string(effective_sprite_size()) + " px) is larger than the frame (" +
                      std::to_string(frame_size) + " px)");
  }
  if (start) {
    for (double f : *start) {
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("start fractions must lie in [0, 1]");
    }
  }
}

// ---------------------------------------------------------------------------
// Glyphs

namespace {

using Point = std::array<double, 2>;
using Stroke = std::vector<Point>;

Stroke ellipse(double cx, double cy, double rx, double ry, int n = 20) {
  Stroke s;
  for (int i = 0; i <= n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    s.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return s;
}

// Unit-square strokes, x to the right and y downward.
std::vector<Stroke> digit_strokes(int d) {
  switch (d) {
    case 0: return {ellipse(0.5, 0.5, 0.27, 0.38)};
    case 1: return {{{0.35, 0.25}, {0.55, 0.1}, {0.55, 0.9}}, {{0.38, 0.9}, {0.72, 0.9}}};
    case 2:
      return {{{0.25, 0.3}, {0.35, 0.15}, {0.55, 0.1}, {0.72, 0.2}, {0.75, 0.35}, {0.65, 0.5}, {0.25, 0.9},
               {0.78, 0.9}}};
    case 3:
      return {{{0.25, 0.13}, {0.7, 0.13}, {0.45, 0.43}, {0.65, 0.5}, {0.75, 0.68}, {0.65, 0.85}, {0.45, 0.9},
               {0.25, 0.82}}};
    case 4: return {{{0.65, 0.9}, {0.65, 0.1}, {0.2, 0.65}, {0.8, 0.65}}};
    case 5:
      return {{{0.72, 0.1}, {0.3, 0.1}, {0.27, 0.45}, {0.5, 0.4}, {0.7, 0.5}, {0.75, 0.7}, {0.62, 0.87},
               {0.42, 0.9}, {0.25, 0.82}}};
    case 6:
      return {{{0.68, 0.12}, {0.45, 0.2}, {0.3, 0.45}, {0.28, 0.7}, {0.4, 0.88}, {0.6, 0.88}, {0.72, 0.7},
               {0.62, 0.53}, {0.42, 0.52}, {0.3, 0.62}}};
    case 7: return {{{0.22, 0.1}, {0.78, 0.1}, {0.42, 0.9}}};
    case 8: return {ellipse(0.5, 0.3, 0.2, 0.18), ellipse(0.5, 0.69, 0.25, 0.21)};
    case 9: return {ellipse(0.5, 0.33, 0.22, 0.2), {{0.72, 0.33}, {0.68, 0.6}, {0.5, 0.9}}};
    default: throw ConfigError("digit must be in 0..9");
  }
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = p[0] - a[0], wy = p[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  const double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
  const double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Matrix render_digit(int digit, int size, std::uint64_t glyph_seed) {
  if (size < 1) throw ConfigError("glyph size must be >= 1");
  std::vector<Stroke> strokes = digit_strokes(digit);

  detail::Rng rng(detail::mix_seed(glyph_seed, static_cast<std::uint64_t>(digit)));
  boost::random::uniform_real_distribution<double> u(-1.0, 1.0);
  const double rot = 0.12 * u(rng);
  const double scale = 0.95 + 0.05 * u(rng);
  const double shear = 0.1 * u(rng);
  const double half_width = 0.055 * (1.0 + 0.15 * u(rng));
  const double c = std::cos(rot), s = std::sin(rot);
  for (auto& stroke : strokes) {
    for (auto& p : stroke) {
      const double x = (p[0] - 0.5) * scale + shear * (p[1] - 0.5);
      const double y = (p[1] - 0.5) * scale;
      p = {0.5 + c * x - s * y, 0.5 + s * x + c * y};
    }
  }

  Matrix img(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const Point p{(j + 0.5) / size, (i + 0.5) / size};
      double d = std::numeric_limits<double>::infinity();
      for (const auto& stroke : strokes) {
        for (std::size_t k = 0; k + 1 < stroke.size(); ++k) d = std::min(d, segment_distance(p, stroke[k], stroke[k + 1]));
      }
      // One-pixel linear ramp at the stroke edge.
      img(i, j) = std::clamp((half_width - d) * size + 0.5, 0.0, 1.0);
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Sequences

void SequenceBatch::validate() const {
  if (meta.size() != frames.size()) throw ShapeError("batch metadata count differs from sequence count");
  const Eigen::Index d = static_cast<Eigen::Index>(frame_h) * frame_w;
  for (const auto& seq : frames) {
    if (static_cast<int>(seq.size()) != seq_len) throw ShapeError("sequence length differs from batch seq_len");
    for (const auto& f : seq) {
      if (f.rows() != d || f.cols() != 1) throw ShapeError("frame shape differs from batch frame size");
      if (f.minCoeff() < 0.0 || f.maxCoeff() > 1.0) throw DomainError("pixel outside [0, 1]", 0, f.maxCoeff());
    }
  }
}

std::vector<std::array<double, 2>> trajectory(double x0, double y0, double angle_deg, double speed,
                                              int frame_size, int sprite_size, int steps, bool bounce) {
  const double limit = frame_size - sprite_size;
  const double theta = angle_deg * std::numbers::pi / 180.0;
  double v[2] = {speed * frame_size * std::cos(theta), speed * frame_size * std::sin(theta)};
  double p[2] = {x0, y0};
  std::vector<std::array<double, 2>> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    if (t > 0) {
      for (int a = 0; a < 2; ++a) {
        p[a] += v[a];
        if (!bounce) continue;
        if (limit <= 0.0) {
          p[a] = 0.0;
          continue;
        }
        // Reflect until inside; a step longer than the box can bounce twice.
        while (p[a] < 0.0 || p[a] > limit) {
          p[a] = p[a] < 0.0 ? -p[a] : 2.0 * limit - p[a];
          v[a] = -v[a];
        }
      }
    }
    out.push_back({p[0], p[1]});
  }
  return out;
}

namespace {

void splat(Matrix& canvas, const Matrix& sprite, double x, double y, RenderMode mode) {
  const Eigen::Index h = canvas.rows(), w = canvas.cols();
  auto put = [&](Eigen::Index r, Eigen::Index c, double v) {
    if (r >= 0 && r < h && c >= 0 && c < w) canvas(r, c) += v;
  };
  if (mode == RenderMode::Snap) {
    const auto ox = static_cast<Eigen::Index>(std::lround(x));
    const auto oy = static_cast<Eigen::Index>(std::lround(y));
    for (Eigen::Index i = 0; i < sprite.rows(); ++i) {
      for (Eigen::Index j = 0; j < sprite.cols(); ++j) put(oy + i, ox + j, sprite(i, j));
    }
    return;
  }
  const double fx0 = std::floor(x), fy0 = std::floor(y);
  const double fx = x - fx0, fy = y - fy0;
  const auto ox = static_cast<Eigen::Index>(fx0), oy = static_cast<Eigen::Index>(fy0);
  const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy), w10 = (1 - fx) * fy, w11 = fx * fy;
  for (Eigen::Index i = 0; i < sprite.rows(); ++i) {
    for (Eigen::Index j = 0; j < sprite.cols(); ++j) {
      const double v = sprite(i, j);
      if (v == 0.0) continue;
      put(oy + i, ox + j, w00 * v);
      if (w01 != 0.0) put(oy + i, ox + j + 1, w01 * v);
      if (w10 != 0.0) put(oy + i + 1, ox + j, w10 * v);
      if (w11 != 0.0) put(oy + i + 1, ox + j + 1, w11 * v);
    }
  }
}

Matrix flatten(const Matrix& img) {
  Matrix col(img.size(), 1);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) col(k++) = img(r, c);
  }
  return col;
}

}  // namespace

SequenceBatch generate(const TrajectoryConfig& cfg, std::size_t n, const SpriteSet* sprites) {
  cfg.validate();
  if (sprites && sprites->empty()) throw ConfigError("sprite set is empty");
  const int f = cfg.frame_size;
  const int s = cfg.effective_sprite_size();
  if (sprites) {
    for (const auto& sp : *sprites) {
      if (sp.pixels.rows() > f || sp.pixels.cols() > f) throw ConfigError("sprite is larger than the frame");
    }
  }

  SequenceBatch b;
  b.frame_h = b.frame_w = f;
  b.seq_len = cfg.seq_len;
  b.frames.resize(n);
  b.meta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seq_seed = detail::mix_seed(cfg.seed, i);
    detail::Rng rng(seq_seed);
    boost::random::uniform_01<double> u01;

    TrajectoryConfig realized = cfg;
    realized.seed = seq_seed;
    if (cfg.random_trajectory) realized.angle_deg = 360.0 * u01(rng);

    std::vector<Matrix> layers;
    for (int k = 0; k < cfg.n_digits; ++k) {
      Matrix glyph;
      if (sprites) {
        const auto idx = static_cast<std::size_t>(u01(rng) * static_cast<double>(sprites->size()));
        glyph = (*sprites)[std::min(idx, sprites->size() - 1)].pixels;
      } else {
        const int digit = cfg.digit >= 0 ? cfg.digit : static_cast<int>(u01(rng) * 10.0) % 10;
        glyph = render_digit(digit, s, cfg.glyph_seed);
      }
      std::array<double, 2> start{};
      if (k == 0 && cfg.start && !cfg.random_trajectory) {
        start = *cfg.start;
      } else {
        start = {u01(rng), u01(rng)};
      }
      const double span = f - std::max(glyph.rows(), glyph.cols());
      const double angle = k == 0 ? realized.angle_deg : (cfg.random_trajectory ? 360.0 * u01(rng) : realized.angle_deg);
      const auto path = trajectory(start[0] * span, start[1] * span, angle, cfg.speed, f,
                                   static_cast<int>(std::max(glyph.rows(), glyph.cols())), cfg.seq_len, cfg.bounce);
      for (int t = 0; t < cfg.seq_len; ++t) {
        Matrix canvas = Matrix::Zero(f, f);
        splat(canvas, glyph, path[static_cast<std::size_t>(t)][0], path[static_cast<std::size_t>(t)][1], cfg.render);
        if (k == 0) {
          layers.push_back(std::move(canvas));
        } else if (cfg.composite == CompositeMode::Max) {
          layers[static_cast<std::size_t>(t)] = layers[static_cast<std::size_t>(t)].cwiseMax(canvas);
        } else {
          layers[static_cast<std::size_t>(t)] += canvas;
        }
      }
    }

    auto& seq = b.frames[i];
    for (auto& img : layers) {
      if (cfg.noise_b > 0.0) {
        boost::random::uniform_real_distribution<double> noise(0.0, cfg.noise_b);
        for (Eigen::Index r = 0; r < img.rows(); ++r) {
          for (Eigen::Index c = 0; c < img.cols(); ++c) img(r, c) += noise(rng);
        }
      }
      img = img.cwiseMax(0.0).cwiseMin(1.0);
      seq.push_back(flatten(img));
    }
    b.meta[i] = realized;
  }
  return b;
}

std::vector<DeviationSet> deviation_suite(const TrajectoryConfig& train, std::size_t count,
                                          const SpriteSet* sprites) {
  train.validate();
  if (train.random_trajectory) throw ConfigError("deviation suite needs a fixed training trajectory");
  std::vector<DeviationSet> out;
  // One seed for every set: sequence i of each set shares its start, digit
  // and noise stream, so levels are compared on paired sequences.
  const std::uint64_t seed = detail::mix_seed(train.seed, 0x5eed0000ULL);
  auto add = [&](std::string suite, double level, TrajectoryConfig cfg) {
    cfg.seed = seed;
    DeviationSet d{std::move(suite), level, cfg, generate(cfg, count, sprites)};
    out.push_back(std::move(d));
  };
  add("reference", 0.0, train);
  for (double delta : {5.0, 10.0, 15.0}) {
    TrajectoryConfig c = train;
    c.angle_deg = train.angle_deg + delta;
    add("angle", c.angle_deg, c);
  }
  for (double delta : {0.005, 0.010, 0.015}) {
    TrajectoryConfig c = train;
    c.speed = train.speed + delta;
    add("speed", c.speed, c);
  }
  for (double b : {0.2, 0.4, 0.6}) {
    TrajectoryConfig c = train;
    c.noise_b = b;
    add("noise", b, c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string encode_dataset(const SequenceBatch& b) {
  b.validate();
  ByteWriter w;
  w.bytes(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(b.size()));
  w.u32(static_cast<std::uint32_t>(b.seq_len));
  w.u32(static_cast<std::uint32_t>(b.frame_h));
  w.u32(static_cast<std::uint32_t>(b.frame_w));
  for (const auto& m : b.meta) {
    w.f64(m.angle_deg);
    w.f64(m.speed);
    w.f64(m.noise_b);
    w.u64(m.seed);
  }
  for (const auto& seq : b.frames) {
    for (const auto& f : seq) {
      for (Eigen::Index k = 0; k < f.size(); ++k) w.f64(f(k));
    }
  }
  return w.take();
}

SequenceBatch decode_dataset(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(std::min(bytes.size(), kDatasetMagic.size())) != kDatasetMagic) {
    throw FormatError("not a dataset container (bad magic)", 0);
  }
  const std::size_t version_at = r.offset();
  if (const auto v = r.u32(); v != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(v), version_at);
  }
  const std::size_t dims_at = r.offset();
  const std::uint32_t n = r.u32(), t = r.u32(), h = r.u32(), w = r.u32();
  const std::uint64_t pixels = std::uint64_t{n} * t * h * w;
  if (pixels * 8 + std::uint64_t{n} * 32 != r.remaining()) {
    throw FormatError("dataset size does not match its header", dims_at);
  }
  SequenceBatch b;
  b.frame_h = static_cast<int>(h);
  b.frame_w = static_cast<int>(w);
  b.seq_len = static_cast<int>(t);
  b.meta.resize(n);
  for (auto& m : b.meta) {
    m.angle_deg = r.f64();
    m.speed = r.f64();
    m.noise_b = r.f64();
    m.seed = r.u64();
    m.frame_size = static_cast<int>(h);
    m.seq_len = static_cast<int>(t);
  }
  b.frames.resize(n);
  for (auto& seq : b.frames) {
    for (std::uint32_t k = 0; k < t; ++k) {
      const std::size_t at = r.offset();
      Matrix f(static_cast<Eigen::Index>(h) * w, 1);
      for (Eigen::Index i = 0; i < f.size(); ++i) {
        f(i) = r.f64();
        if (!(f(i) >= 0.0 && f(i) <= 1.0)) throw FormatError("pixel outside [0, 1]", at);
      }
      seq.push_back(std::move(f));
    }
  }
  return b;
}

void write_dataset(const std::filesystem::path& path, const SequenceBatch& b) {
  write_file_atomic(path, encode_dataset(b));
}

SequenceBatch read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

std::string encode_pgm(const Matrix& image, double scale) {
  if (!(scale > 0.0)) throw DomainError("PGM scale must be > 0", 0, scale);
  std::string out = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(image(r, c) / scale * 255.0, 0.0, 255.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Matrix& image, double scale) {
  write_file_atomic(path, encode_pgm(image, scale));
}

Matrix unflatten(const Matrix& column, int h, int w) {
  if (column.size() != static_cast<Eigen::Index>(h) * w) throw ShapeError("unflatten: size mismatch");
  Matrix img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) img(r, c) = column(static_cast<Eigen::Index>(r) * w + c);
  }
  return img;
}

namespace {

std::uint32_t be32(ByteReader& r) {
  const auto b = r.bytes(4);
  return (std::uint32_t{static_cast<unsigned char>(b[0])} << 24) |
         (std::uint32_t{static_cast<unsigned char>(b[1])} << 16) |
         (std::uint32_t{static_cast<unsigned char>(b[2])} << 8) | std::uint32_t{static_cast<unsigned char>(b[3])};
}

}  // namespace

SpriteSet parse_idx(std::string_view images, std::optional<std::string_view> labels) {
  ByteReader r(images);
  if (const auto magic = be32(r); magic != 0x00000803) throw FormatError("bad IDX image magic", 0);
  const std::uint32_t n = be32(r), rows = be32(r), cols = be32(r);
  if (rows == 0 || cols == 0) throw FormatError("IDX image with zero extent", 8);
  if (std::uint64_t{n} * rows * cols > r.remaining()) {
    throw FormatError("IDX image data truncated", images.size());
  }
  SpriteSet out(n);
  for (auto& sp : out) {
    const auto px = r.bytes(std::size_t{rows} * cols);
    sp.pixels.resize(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) {
        sp.pixels(i, j) = static_cast<unsigned char>(px[std::size_t{i} * cols + j]) / 255.0;
      }
    }
  }
  if (labels) {
    ByteReader l(*labels);
    if (const auto magic = be32(l); magic != 0x00000801) throw FormatError("bad IDX label magic", 0);
    const std::uint32_t count = be32(l);
    if (count != n) throw FormatError("IDX label count differs from image count", 4);
    const auto data = l.bytes(count);
    for (std::uint32_t i = 0; i < n; ++i) out[i].label = static_cast<unsigned char>(data[i]);
  }
  return out;
}

SpriteSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                   const std::optional<std::vector<int>>& keep) {
  if (keep && keep->empty()) throw ConfigError("label selection is empty");
  const std::string img = read_file(images);
  const std::string lab = read_file(labels);
  SpriteSet all = parse_idx(img, lab);
  if (!keep) return all;
  SpriteSet out;
  for (auto& sp : all) {
    if (std::find(keep->begin(), keep->end(), sp.label) != keep->end()) out.push_back(std::move(sp));
  }
  if (out.empty()) throw ConfigError("label selection matches no images");
  return out;
}

}  // namespace spgru
