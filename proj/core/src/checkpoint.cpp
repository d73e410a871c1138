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

#include "spgru/checkpoint.hpp"

#include <charconv>
#include <map>

#include "spgru/binary_io.hpp"
#include "spgru/error.hpp"

namespace spgru {

const Matrix* Checkpoint::find_extra(std::string_view name) const {
  for (const auto& a : extra) {
    if (a.name == name) return &a.value;
  }
  return nullptr;
}

NetworkConfig parse_canonical_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  while (!text.empty()) {
    const auto end = text.find(';');
    const auto item = text.substr(0, end);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("malformed config entry '" + std::string(item) + "'");
    kv.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(std::string("config is missing '") + key + "'");
    return it->second;
  };
  auto integer = [&](const char* key) {
    const std::string& s = get(key);
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError(std::string("bad integer for '") + key + "'");
    return v;
  };
  NetworkConfig cfg;
  cfg.mode = parse_mode(get("mode"));
  cfg.input_len = static_cast<int>(integer("input_len"));
  cfg.output_len = static_cast<int>(integer("output_len"));
  cfg.hidden = static_cast<Eigen::Index>(integer("hidden"));
  cfg.input = static_cast<Eigen::Index>(integer("input"));
  cfg.cell_variance_rule = parse_cell_variance_rule(get("cell_variance_rule"));
  cfg.gate_product_rule = parse_gate_product_rule(get("gate_product_rule"));
  cfg.loss = parse_loss_kind(get("loss"));
  cfg.sigmoid_omega = parse_sigmoid_omega(get("sigmoid_omega"));
  if (kv.size() != 9) throw ConfigError("config has unexpected entries");
  cfg.validate();
  return cfg;
}

std::string encode_checkpoint(const Checkpoint& c) {
  c.config.validate();
  check_shapes(c.params, c.config);
  ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.config.hidden));
  w.u32(static_cast<std::uint32_t>(c.config.input));
  w.u32(static_cast<std::uint32_t>(c.family));
  w.u64(c.config.hash());
  w.str(c.config.canonical());
  w.str(c.meta);
  std::uint32_t count = static_cast<std::uint32_t>(c.extra.size());
  c.params.visit([&](const std::string&, const Matrix&) { ++count; });
  w.u32(count);
  c.params.visit([&](const std::string& name, const Matrix& m) {
    w.str(name);
    w.matrix(m);
  });
  for (const auto& a : c.extra) {
    w.str(a.name);
    w.matrix(a.value);
  }
  return w.take();
}

namespace {

/// Empty parameter set with the structure implied by the config.
NetworkParams skeleton(const NetworkConfig& cfg) {
  NetworkParams p;
  p.encoder.hidden = cfg.hidden;
  p.encoder.input = cfg.input;
  auto head = [&] {
    HeadParams h;
    h.cell.hidden = cfg.hidden;
    h.cell.input = 0;
    return h;
  };
  if (cfg.has_reconstruction()) p.reconstruct = head();
  if (cfg.has_prediction()) p.predict = head();
  return p;
}

}  // namespace

Checkpoint decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(std::min(bytes.size(), kCheckpointMagic.size())) != kCheckpointMagic) {
    throw FormatError("not a checkpoint (bad magic)", 0);
  }
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const std::uint32_t hidden = r.u32();
  const std::uint32_t input = r.u32();
  const std::size_t family_at = r.offset();
  const std::uint32_t family = r.u32();
  if (family > static_cast<std::uint32_t>(Family::Poisson)) throw FormatError("unknown family", family_at);
  const std::uint64_t hash = r.u64();
  const std::size_t config_at = r.offset();
  const std::string canonical = r.str();

  Checkpoint c;
  try {
    c.config = parse_canonical_config(canonical);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad embedded config: ") + e.what(), config_at);
  }
  if (c.config.hash() != hash) throw FormatError("config hash mismatch", config_at);
  if (c.config.hidden != hidden || c.config.input != input) {
    throw FormatError("header dimensions disagree with embedded config", config_at);
  }
  c.family = static_cast<Family>(family);
  c.meta = r.str();

  const std::uint32_t count = r.u32();
  std::vector<NamedArray> arrays;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.str(4096);
    a.value = r.matrix();
    arrays.push_back(std::move(a));
  }
  if (!r.done()) throw FormatError("trailing bytes after last array", r.offset());

  c.params = skeleton(c.config);
  std::size_t next = 0;
  c.params.visit([&](const std::string& name, Matrix& m) {
    if (next >= arrays.size() || arrays[next].name != name) {
      throw ShapeError("checkpoint is missing array '" + name + "'");
    }
    m = std::move(arrays[next].value);
    ++next;
  });
  check_shapes(c.params, c.config);
  for (; next < arrays.size(); ++next) c.extra.push_back(std::move(arrays[next]));
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, encode_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace spgru
