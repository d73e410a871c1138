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

#include "spgru/run_config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "spgru/binary_io.hpp"
#include "spgru/error.hpp"

namespace spgru {

namespace {

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

struct Field {
  std::string section, key, value;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("[" + section + "] " + key + " = '" + value + "': " + why);
  }

  long long integer(long long lo, long long hi) const {
    long long v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) fail("expected an integer");
    if (v < lo || v > hi) fail("out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  std::uint64_t u64() const {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) fail("expected an unsigned integer");
    return v;
  }

  double real() const {
    double v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size() || !std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  bool boolean() const {
    if (value == "true") return true;
    if (value == "false") return false;
    fail("expected true or false");
  }

  std::vector<std::string> list() const {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b == std::string::npos) fail("empty list element");
      out.push_back(item.substr(b, e - b + 1));
    }
    if (out.empty()) fail("expected a comma-separated list");
    return out;
  }

  template <class F>
  auto parsed(F&& f) const {
    try {
      return f(value);
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }
};

using Setter = std::function<void(RunConfig&, const Field&, const std::filesystem::path&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"model",
       {
           {"mode", [](RunConfig& c, const Field& f, auto&) { c.model.mode = f.parsed(parse_mode); }},
           {"input_len", [](RunConfig& c, const Field& f, auto&) { c.model.input_len = static_cast<int>(f.integer(1, 100000)); }},
           {"output_len", [](RunConfig& c, const Field& f, auto&) { c.model.output_len = static_cast<int>(f.integer(1, 100000)); }},
           {"hidden", [](RunConfig& c, const Field& f, auto&) { c.model.hidden = f.integer(1, 1 << 16); }},
           {"cell_variance_rule",
            [](RunConfig& c, const Field& f, auto&) { c.model.cell_variance_rule = f.parsed(parse_cell_variance_rule); }},
           {"gate_product_rule",
            [](RunConfig& c, const Field& f, auto&) { c.model.gate_product_rule = f.parsed(parse_gate_product_rule); }},
           {"loss", [](RunConfig& c, const Field& f, auto&) { c.model.loss = f.parsed(parse_loss_kind); }},
           {"sigmoid_omega", [](RunConfig& c, const Field& f, auto&) { c.model.sigmoid_omega = f.parsed(parse_sigmoid_omega); }},
       }},
      {"data",
       {
           {"angle", [](RunConfig& c, const Field& f, auto&) { c.data.angle_deg = f.real(); }},
           {"speed", [](RunConfig& c, const Field& f, auto&) { c.data.speed = f.real(); }},
           {"noise", [](RunConfig& c, const Field& f, auto&) { c.data.noise_b = f.real(); }},
           {"frame_size", [](RunConfig& c, const Field& f, auto&) { c.data.frame_size = static_cast<int>(f.integer(1, 4096)); }},
           {"seq_len", [](RunConfig& c, const Field& f, auto&) { c.data.seq_len = static_cast<int>(f.integer(2, 100000)); }},
           {"n_digits", [](RunConfig& c, const Field& f, auto&) { c.data.n_digits = static_cast<int>(f.integer(1, 64)); }},
           {"bounce", [](RunConfig& c, const Field& f, auto&) { c.data.bounce = f.boolean(); }},
           {"start",
            [](RunConfig& c, const Field& f, auto&) {
              if (f.value == "random") {
                c.data.start.reset();
                return;
              }
              const auto parts = f.list();
              if (parts.size() != 2) f.fail("expected 'x, y' or random");
              Field fx{f.section, f.key, parts[0]}, fy{f.section, f.key, parts[1]};
              c.data.start = std::array<double, 2>{fx.real(), fy.real()};
            }},
           {"random_trajectory", [](RunConfig& c, const Field& f, auto&) { c.data.random_trajectory = f.boolean(); }},
           {"digit", [](RunConfig& c, const Field& f, auto&) { c.data.digit = static_cast<int>(f.integer(-1, 9)); }},
           {"sprite_size", [](RunConfig& c, const Field& f, auto&) { c.data.sprite_size = static_cast<int>(f.integer(0, 4096)); }},
           {"glyph_seed", [](RunConfig& c, const Field& f, auto&) { c.data.glyph_seed = f.u64(); }},
           {"render", [](RunConfig& c, const Field& f, auto&) { c.data.render = f.parsed(parse_render_mode); }},
           {"composite", [](RunConfig& c, const Field& f, auto&) { c.data.composite = f.parsed(parse_composite_mode); }},
           {"seed", [](RunConfig& c, const Field& f, auto&) { c.data.seed = f.u64(); }},
           {"idx_images",
            [](RunConfig& c, const Field& f, const std::filesystem::path& base) {
              if (!c.idx) c.idx.emplace();
              c.idx->images = base / f.value;
            }},
           {"idx_labels",
            [](RunConfig& c, const Field& f, const std::filesystem::path& base) {
              if (!c.idx) c.idx.emplace();
              c.idx->labels = base / f.value;
            }},
           {"idx_keep",
            [](RunConfig& c, const Field& f, auto&) {
              if (!c.idx) c.idx.emplace();
              std::vector<int> keep;
              for (const auto& item : f.list()) keep.push_back(static_cast<int>(Field{f.section, f.key, item}.integer(0, 255)));
              c.idx->keep = keep;
            }},
       }},
      {"train",
       {
           {"epochs", [](RunConfig& c, const Field& f, auto&) { c.train.epochs = static_cast<int>(f.integer(0, 100000000)); }},
           {"steps_per_epoch",
            [](RunConfig& c, const Field& f, auto&) { c.train.steps_per_epoch = static_cast<int>(f.integer(1, 100000000)); }},
           {"batch_size", [](RunConfig& c, const Field& f, auto&) { c.train.batch_size = static_cast<int>(f.integer(1, 1000000)); }},
           {"lr", [](RunConfig& c, const Field& f, auto&) { c.train.lr = f.real(); }},
           {"beta1", [](RunConfig& c, const Field& f, auto&) { c.train.beta1 = f.real(); }},
           {"beta2", [](RunConfig& c, const Field& f, auto&) { c.train.beta2 = f.real(); }},
           {"eps", [](RunConfig& c, const Field& f, auto&) { c.train.eps = f.real(); }},
           {"clip_norm",
            [](RunConfig& c, const Field& f, auto&) {
              if (f.value == "off") {
                c.train.clip_norm.reset();
              } else {
                c.train.clip_norm = f.real();
              }
            }},
           {"init_variance", [](RunConfig& c, const Field& f, auto&) { c.train.init_variance = f.real(); }},
           {"checkpoint_every",
            [](RunConfig& c, const Field& f, auto&) { c.train.checkpoint_every = static_cast<int>(f.integer(0, 100000000)); }},
           {"seed", [](RunConfig& c, const Field& f, auto&) { c.train.seed = f.u64(); }},
           {"threads", [](RunConfig& c, const Field& f, auto&) { c.train.threads = static_cast<int>(f.integer(1, 1024)); }},
       }},
      {"eval",
       {
           {"suites",
            [](RunConfig& c, const Field& f, auto&) {
              c.eval.suites = f.list();
              for (const auto& s : c.eval.suites) {
                if (s != "angle" && s != "speed" && s != "noise") f.fail("unknown suite '" + s + "'");
              }
            }},
           {"count", [](RunConfig& c, const Field& f, auto&) { c.eval.count = static_cast<std::size_t>(f.integer(1, 1000000)); }},
           {"checkpoint",
            [](RunConfig& c, const Field& f, const std::filesystem::path& base) { c.eval.checkpoint = base / f.value; }},
       }},
      {"oracle",
       {
           {"suites",
            [](RunConfig& c, const Field& f, auto&) {
              c.oracle.suites = f.list();
              for (const auto& s : c.oracle.suites) {
                if (s != "lmm" && s != "sigmoid" && s != "tanh" && s != "gamma" && s != "poisson" && s != "cell") {
                  f.fail("unknown suite '" + s + "'");
                }
              }
            }},
           {"n", [](RunConfig& c, const Field& f, auto&) { c.oracle.n = static_cast<std::size_t>(f.integer(0, 1000000000)); }},
           {"cell_n", [](RunConfig& c, const Field& f, auto&) { c.oracle.cell_n = static_cast<std::size_t>(f.integer(0, 1000000000)); }},
           {"seed", [](RunConfig& c, const Field& f, auto&) { c.oracle.seed = f.u64(); }},
       }},
      {"output",
       {
           {"dir", [](RunConfig& c, const Field& f, const std::filesystem::path& base) { c.out_dir = base / f.value; }},
           {"preview", [](RunConfig& c, const Field& f, auto&) { c.preview = f.boolean(); }},
       }},
  };
  return s;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  data.validate();
  train.validate();
  if (static_cast<Eigen::Index>(data.frame_size) * data.frame_size != model.input) {
    throw ConfigError("model input size does not match data frame_size");
  }
  const int needed = model.input_len + (model.has_prediction() ? model.output_len : 0);
  if (data.seq_len < needed) {
    throw ConfigError("[data] seq_len = " + std::to_string(data.seq_len) + " is shorter than the " +
                      std::to_string(needed) + " frames the model needs");
  }
  if (idx && (idx->images.empty() || idx->labels.empty())) {
    throw ConfigError("[data] idx_images and idx_labels must be given together");
  }
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg;
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    const auto sec = sch.find(section);
    if (sec == sch.end()) {
      if (body.empty()) throw ConfigError("key '" + section + "' outside of any section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      setter->second(cfg, Field{section, key, unquote(node.get_value<std::string>())}, base_dir);
    }
  }
  cfg.model.input = static_cast<Eigen::Index>(cfg.data.frame_size) * cfg.data.frame_size;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  return parse_run_config(text, path.parent_path());
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.data.seed = seed;
  cfg.train.seed = seed;
  cfg.oracle.seed = seed;
}

}  // namespace spgru
