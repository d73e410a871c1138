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

#include "spgru/commands.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "random_util.hpp"
#include "spgru/binary_io.hpp"
#include "spgru/checkpoint.hpp"
#include "spgru/error.hpp"
#include "spgru/mc_oracle.hpp"
#include "spgru/metrics.hpp"
#include "spgru/run_config.hpp"
#include "spgru/training.hpp"

namespace spgru {

namespace {

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

RunConfig load(const CommandOptions& opt) {
  RunConfig cfg;
  if (opt.config) cfg = load_run_config(*opt.config);
  if (opt.seed) override_seed(cfg, *opt.seed);
  if (opt.out) cfg.out_dir = *opt.out;
  if (opt.threads) {
    cfg.train.threads = *opt.threads;
  } else if (const char* env = std::getenv("SPGRU_THREADS"); env && *env) {
    int v = 0;
    const std::string_view s(env);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v < 1) {
      throw ConfigError("SPGRU_THREADS must be a positive integer");
    }
    cfg.train.threads = v;
  }
  cfg.validate();
  return cfg;
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) { write_file_atomic(path, text); }

std::optional<SpriteSet> sprites_for(const RunConfig& cfg) {
  if (!cfg.idx) return std::nullopt;
  return load_idx(cfg.idx->images, cfg.idx->labels, cfg.idx->keep);
}

std::filesystem::path checkpoint_path(const CommandOptions& opt, const RunConfig& cfg) {
  if (opt.checkpoint) return *opt.checkpoint;
  if (cfg.eval.checkpoint) return *cfg.eval.checkpoint;
  return cfg.out_dir / "model.spgru";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

int cmd_train(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(opt);
    const auto sprites = sprites_for(cfg);
    make_dir(cfg.out_dir);
    TrainOptions to;
    to.out_dir = cfg.out_dir;
    to.sprites = sprites ? &*sprites : nullptr;
    if (opt.checkpoint) to.resume = load_checkpoint(*opt.checkpoint);
    const TrainResult r = train(cfg.model, cfg.data, cfg.train, to);
    if (!r.log.empty()) {
      out << "first " << format_epoch(r.log.front()) << '\n' << "last  " << format_epoch(r.log.back()) << '\n';
    }
    out << "checkpoint " << (cfg.out_dir / "model.spgru").string() << '\n';
    return kExitOk;
  });
}

int cmd_eval_deviation(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(opt);
    std::vector<std::string> suites = cfg.eval.suites;
    if (opt.suite) {
      if (*opt.suite == "all") {
        suites = {"angle", "speed", "noise"};
      } else if (*opt.suite == "angle" || *opt.suite == "speed" || *opt.suite == "noise") {
        suites = {*opt.suite};
      } else {
        throw ConfigError("unknown suite '" + *opt.suite + "' (expected angle, speed, noise or all)");
      }
    }
    const Checkpoint model = load_checkpoint(checkpoint_path(opt, cfg));
    if (model.config.hash() != cfg.model.hash()) {
      throw ConfigError("checkpoint model config (" + model.config.canonical() + ") differs from the run config (" +
                        cfg.model.canonical() + ")");
    }
    const auto sprites = sprites_for(cfg);
    const auto sets = deviation_suite(cfg.data, cfg.eval.count, sprites ? &*sprites : nullptr);
    make_dir(cfg.out_dir);
    for (const auto& suite : suites) {
      const auto rows = evaluate_deviation(model, sets, suite, cfg.train.threads);
      write_text(cfg.out_dir / ("deviation_" + suite + ".tsv"), format_deviation_table(rows));
      write_text(cfg.out_dir / ("deviation_" + suite + "_sequences.tsv"), format_sequence_table(rows));
      out << suite << ':';
      for (const auto& r : rows) out << ' ' << fmt("%g", r.level) << '=' << fmt("%.6g", r.metric.average);
      out << "  strictly_increasing=" << (strictly_increasing(rows) ? "yes" : "no") << '\n';
    }
    return kExitOk;
  });
}

int cmd_export_maps(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(opt);
    const Checkpoint model = load_checkpoint(checkpoint_path(opt, cfg));
    if (model.config.input != static_cast<Eigen::Index>(cfg.data.frame_size) * cfg.data.frame_size) {
      throw ConfigError("checkpoint input size does not match [data] frame_size");
    }
    const auto sprites = sprites_for(cfg);
    const SequenceBatch batch = generate(cfg.data, 1, sprites ? &*sprites : nullptr);
    const auto pred = predicted_frames(model, batch.frames[0]);
    const std::filesystem::path dir = cfg.out_dir / "maps";
    make_dir(dir);
    double vmax = 0.0;
    for (const auto& p : pred) vmax = std::max(vmax, p.s.maxCoeff());
    const bool degenerate = !(vmax > 0.0);
    const double scale = degenerate ? 1.0 : vmax;
    const int h = batch.frame_h, w = batch.frame_w;
    for (std::size_t t = 0; t < pred.size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "%02zu", t + 1);
      write_pgm(dir / (std::string("mean_") + name + ".pgm"), unflatten(pred[t].m, h, w));
      write_pgm(dir / (std::string("var_") + name + ".pgm"), unflatten(pred[t].s, h, w), scale);
    }
    std::ostringstream side;
    side << "format=1\nframes=" << pred.size() << "\nwidth=" << w << "\nheight=" << h << "\nmean_scale=1\n"
         << "variance_scale=" << fmt("%.17g", scale) << "\ndegenerate=" << (degenerate ? "yes" : "no") << '\n';
    write_text(dir / "maps.txt", side.str());
    out << "wrote " << 2 * pred.size() << " maps to " << dir.string() << (degenerate ? " (variance degenerate)" : "")
        << '\n';
    return kExitOk;
  });
}

namespace {

std::vector<OracleReport> oracle_lmm(const OracleOptions& o) {
  std::vector<OracleReport> all;
  auto run = [&](const LinearLayerParams& p, const MomentTensor& a, std::uint64_t tag) {
    OracleOptions oo = o;
    oo.seed = detail::mix_seed(o.seed, tag);
    auto r = verify_lmm(p, a, oo);
    all.insert(all.end(), r.begin(), r.end());
  };
  auto scalar = [](double wm, double ws, double bm, double bs) {
    return LinearLayerParams{Matrix::Constant(1, 1, wm), Matrix::Constant(1, 1, ws), Matrix::Constant(1, 1, bm),
                             Matrix::Constant(1, 1, bs)};
  };
  run(scalar(2.0, 0.5, 1.0, 0.25), MomentTensor::scalar(3.0, 1.0), 1);
  run(scalar(2.0, 0.0, 1.0, 0.0), MomentTensor::scalar(3.0, 0.0), 2);
  run(scalar(0.5, 10.0, -1.0, 0.1), MomentTensor::scalar(1.5, 0.3), 3);
  detail::Rng rng(detail::mix_seed(o.seed, 4));
  boost::random::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 0.5);
  LinearLayerParams p{Matrix(3, 4), Matrix(3, 4), Matrix(3, 1), Matrix(3, 1)};
  MomentTensor a{Matrix(4, 1), Matrix(4, 1)};
  for (Eigen::Index i = 0; i < p.w_m.size(); ++i) {
    p.w_m(i) = u(rng);
    p.w_s(i) = pos(rng);
  }
  for (Eigen::Index i = 0; i < 3; ++i) {
    p.b_m(i) = u(rng);
    p.b_s(i) = pos(rng);
  }
  for (Eigen::Index i = 0; i < 4; ++i) {
    a.m(i) = u(rng);
    a.s(i) = pos(rng);
  }
  run(p, a, 5);
  return all;
}

std::vector<OracleReport> oracle_cell(const RunConfig& cfg, CellRules rules, std::uint64_t seed) {
  const Eigen::Index hidden = 4, input = 3;
  CellParams p = init_cell(detail::mix_seed(seed, 10), hidden, input, 1e-3);
  detail::Rng rng(detail::mix_seed(seed, 11));
  boost::random::uniform_real_distribution<double> u(-0.5, 0.5);
  for (GateParams* g : {&p.reset, &p.update, &p.candidate}) {
    for (Eigen::Index i = 0; i < g->b_mean.size(); ++i) g->b_mean(i) = u(rng);
  }
  MomentTensor x{Matrix(input, 1), Matrix::Zero(input, 1)};
  for (Eigen::Index i = 0; i < input; ++i) x.m(i) = 2.0 * u(rng);
  CellState h{Matrix(hidden, 1), Matrix::Constant(hidden, 1, 1e-3)};
  for (Eigen::Index i = 0; i < hidden; ++i) h.h_m(i) = u(rng);
  CellOracleOptions co;
  co.n = cfg.oracle.cell_n;
  co.seed = detail::mix_seed(seed, 12);
  return verify_cell(p, x, h, rules, co, cfg.model.constants());
}

}  // namespace

int cmd_oracle(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(opt);
    std::vector<std::string> suites = cfg.oracle.suites;
    if (opt.suite) {
      suites.clear();
      std::stringstream ss(*opt.suite);
      for (std::string s; std::getline(ss, s, ',');) {
        if (s != "lmm" && s != "sigmoid" && s != "tanh" && s != "gamma" && s != "poisson" && s != "cell") {
          throw ConfigError("unknown oracle suite '" + s + "'");
        }
        suites.push_back(s);
      }
      if (suites.empty()) throw ConfigError("empty oracle suite list");
    }
    OracleOptions o;
    o.n = opt.samples.value_or(cfg.oracle.n);
    o.seed = cfg.oracle.seed;
    o.validate();
    if (cfg.oracle.cell_n < kMinOracleSamples) {
      throw ConfigError("[oracle] cell_n must be >= " + std::to_string(kMinOracleSamples));
    }
    const NmmConstants k = cfg.model.constants();

    std::vector<OracleReport> all;
    std::string notes;
    for (std::size_t i = 0; i < suites.size(); ++i) {
      const std::string& s = suites[i];
      OracleOptions oo = o;
      oo.seed = detail::mix_seed(o.seed, 100 + i);
      std::vector<OracleReport> r;
      if (s == "lmm") {
        r = oracle_lmm(oo);
      } else if (s == "sigmoid") {
        r = verify_nmm(Family::Gaussian, Activation::Sigmoid, gaussian_grid(), oo, k);
      } else if (s == "tanh") {
        r = verify_nmm(Family::Gaussian, Activation::Tanh, gaussian_grid(), oo, k);
      } else if (s == "gamma") {
        std::vector<NmmPoint> grid;
        for (double shape : {0.5, 1.0, 2.0, 5.0}) {
          for (double rate : {0.5, 1.0, 3.0}) grid.emplace_back(shape, rate);
        }
        r = verify_nmm(Family::Gamma, Activation::SaturatingExp, grid, oo, k);
      } else if (s == "poisson") {
        r = verify_nmm(Family::Poisson, Activation::SaturatingExp, {{0.1, 0}, {0.5, 0}, {1, 0}, {4, 0}, {10, 0}}, oo, k);
      } else {
        const CellRules rules{cfg.model.cell_variance_rule, cfg.model.gate_product_rule};
        r = oracle_cell(cfg, rules, oo.seed);
        // The other variance rule on the same draw, reported for comparison only.
        CellRules other = rules;
        other.variance = rules.variance == CellVarianceRule::Corrected ? CellVarianceRule::Literal
                                                                       : CellVarianceRule::Corrected;
        double worst_this = 0.0, worst_other = 0.0;
        for (const auto& x : r) worst_this = std::max(worst_this, x.abs_error);
        for (const auto& x : oracle_cell(cfg, other, oo.seed)) worst_other = std::max(worst_other, x.abs_error);
        notes += "# cell max error: " + std::string(to_string(rules.variance)) + "=" + fmt("%.4g", worst_this) + " " +
                 std::string(to_string(other.variance)) + "=" + fmt("%.4g", worst_other) + "\n";
      }
      std::size_t failed = 0;
      double worst = 0.0;
      for (const auto& x : r) {
        failed += x.pass ? 0 : 1;
        worst = std::max(worst, x.abs_error);
      }
      out << s << ": " << r.size() - failed << "/" << r.size() << " passed, max abs error " << fmt("%.4g", worst)
          << '\n';
      for (const auto& x : r) {
        if (!x.pass) {
          out << "  FAIL " << x.operation << ' ' << x.point << ' ' << x.quantity << " closed=" << fmt("%.6g", x.closed)
              << " mc=" << fmt("%.6g", x.mc) << " tol=" << fmt("%.3g", x.tolerance) << '\n';
        }
      }
      all.insert(all.end(), r.begin(), r.end());
    }
    out << notes;
    if (opt.out || opt.config) {
      make_dir(cfg.out_dir);
      write_text(cfg.out_dir / "oracle.tsv", format_reports(all) + notes);
    }
    return all_pass(all) ? kExitOk : kExitVerify;
  });
}

int cmd_generate(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load(opt);
    const auto sprites = sprites_for(cfg);
    const SpriteSet* sp = sprites ? &*sprites : nullptr;
    make_dir(cfg.out_dir);
    std::vector<std::pair<std::string, SequenceBatch>> files;
    if (cfg.data.random_trajectory) {
      files.emplace_back("random", generate(cfg.data, cfg.eval.count, sp));
    } else {
      for (auto& set : deviation_suite(cfg.data, cfg.eval.count, sp)) {
        const std::string name = set.suite == "reference" ? "reference" : set.suite + "_" + fmt("%g", set.level);
        files.emplace_back(name, std::move(set.batch));
      }
    }
    for (const auto& [name, batch] : files) {
      write_dataset(cfg.out_dir / (name + ".spgds"), batch);
      if (cfg.preview) {
        const auto dir = cfg.out_dir / "preview" / name;
        make_dir(dir);
        for (int t = 0; t < batch.seq_len; ++t) {
          char f[32];
          std::snprintf(f, sizeof f, "frame_%02d.pgm", t + 1);
          write_pgm(dir / f, unflatten(batch.frames[0][static_cast<std::size_t>(t)], batch.frame_h, batch.frame_w));
        }
      }
      out << name << ".spgds: " << batch.size() << " sequences\n";
    }
    return kExitOk;
  });
}

}  // namespace spgru
