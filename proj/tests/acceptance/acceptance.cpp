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

// Acceptance runner: one PASS/FAIL line per criterion.
//   spgru_acceptance [--criterion N]... [--work-dir DIR]
// Exit status 0 when every selected criterion passes, 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deterministic_gru.hpp"
#include "spgru/autodiff.hpp"
#include "spgru/checkpoint.hpp"
#include "spgru/commands.hpp"
#include "spgru/mc_oracle.hpp"
#include "spgru/metrics.hpp"
#include "spgru/moments.hpp"
#include "spgru/network.hpp"
#include "spgru/run_config.hpp"
#include "spgru/training.hpp"

using namespace spgru;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Matrix uniform(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string summary;
};

void detail(const std::string& line) { std::cout << "  " << line << '\n' << std::flush; }

std::size_t count_fail(const std::vector<OracleReport>& r) {
  std::size_t n = 0;
  for (const auto& x : r) n += x.pass ? 0 : 1;
  return n;
}

double max_abs_error(const std::vector<OracleReport>& r, const char* quantity = nullptr) {
  double e = 0.0;
  for (const auto& x : r) {
    if (!quantity || x.quantity == quantity) e = std::max(e, x.abs_error);
  }
  return e;
}

void list_failures(const std::vector<OracleReport>& r) {
  int shown = 0;
  for (const auto& x : r) {
    if (x.pass || shown++ == 5) continue;
    detail("  failed " + x.operation + " " + x.point + " " + x.quantity + ": closed " + fmt("%.10g", x.closed) +
           ", sampled " + fmt("%.10g", x.mc) + ", SE " + fmt("%.3g", x.se));
  }
}

double max_z(const std::vector<OracleReport>& r) {
  double z = 0.0;
  for (const auto& x : r) {
    if (x.se > 0.0) z = std::max(z, x.abs_error / x.se);
  }
  return z;
}

// 1. Exact operations against sampling and analytic references.
Outcome criterion_1() {
  constexpr std::size_t kDraws = 1000;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20261017);
  OracleOptions opt;
  opt.n = 1'000'000;

  std::vector<OracleReport> lmm_reports;
  for (std::size_t i = 0; i < kDraws; ++i) {
    const Eigen::Index in = 1 + static_cast<Eigen::Index>(rng() % 3);
    LinearLayerParams p{uniform(rng, 1, in, -1, 1), uniform(rng, 1, in, 0, 0.5), uniform(rng, 1, 1, -1, 1),
                        uniform(rng, 1, 1, 0, 0.5)};
    const MomentTensor a{uniform(rng, in, 1, -1, 1), uniform(rng, in, 1, 0, 0.5)};
    opt.seed = i;
    for (auto& r : verify_lmm(p, a, opt)) lmm_reports.push_back(std::move(r));
  }
  detail("lmm: " + std::to_string(lmm_reports.size() - count_fail(lmm_reports)) + "/" +
         std::to_string(lmm_reports.size()) + " within 4 SE, max |error|/SE " + fmt("%.3f", max_z(lmm_reports)) + ", " + fmt("%.0f", seconds_since(t0)) + " s");
  list_failures(lmm_reports);

  // Candidates are drawn from wide ranges. Sampling checks run only where the
  // estimator of E[g^2], g = exp(-gamma X), has an effective sample size
  // n E[g^2]^2 / E[g^4] of at least 1000; beyond that one rare draw of X
  // dominates the estimate and the normal 4 SE band no longer describes it.
  // Every candidate is still compared with the analytic references.
  constexpr double kMinEss = 1000.0;
  const double gamma_c = NmmConstants{}.gamma;
  auto ess_gamma = [&](double a, double b) {
    return 1e6 * std::pow((b + 4.0 * gamma_c) * b / ((b + 2.0 * gamma_c) * (b + 2.0 * gamma_c)), a);
  };
  auto ess_poisson = [&](double l) {
    return 1e6 * std::exp(l * (2.0 * std::expm1(-2.0 * gamma_c) - std::expm1(-4.0 * gamma_c)));
  };
  std::vector<NmmPoint> gamma_grid, poisson_grid, gamma_all, poisson_all;
  std::uniform_real_distribution<double> shape(0.2, 10.0), rate(0.2, 10.0), lambda(0.05, 30.0);
  while (gamma_grid.size() < kDraws) {
    const NmmPoint p{shape(rng), rate(rng)};
    gamma_all.push_back(p);
    if (ess_gamma(p.first, p.second) >= kMinEss) gamma_grid.push_back(p);
  }
  while (poisson_grid.size() < kDraws) {
    const NmmPoint p{lambda(rng), 0.0};
    poisson_all.push_back(p);
    if (ess_poisson(p.first) >= kMinEss) poisson_grid.push_back(p);
  }
  detail("sampling regime: kept " + std::to_string(kDraws) + " of " + std::to_string(gamma_all.size()) +
         " Gamma and " + std::to_string(kDraws) + " of " + std::to_string(poisson_all.size()) +
         " Poisson candidates (effective sample size >= 1000)");
  opt.seed = 1;
  const auto gamma = verify_nmm(Family::Gamma, Activation::SaturatingExp, gamma_grid, opt);
  detail("gamma: " + std::to_string(gamma.size() - count_fail(gamma)) + "/" + std::to_string(gamma.size()) +
         " within 4 SE, max |error|/SE " + fmt("%.3f", max_z(gamma)) + ", " + fmt("%.0f", seconds_since(t0)) + " s");
  list_failures(gamma);
  opt.seed = 2;
  const auto poisson = verify_nmm(Family::Poisson, Activation::SaturatingExp, poisson_grid, opt);
  detail("poisson: " + std::to_string(poisson.size() - count_fail(poisson)) + "/" + std::to_string(poisson.size()) +
         " within 4 SE, max |error|/SE " + fmt("%.3f", max_z(poisson)) + ", " + fmt("%.0f", seconds_since(t0)) + " s");
  list_failures(poisson);

  // Analytic references: quadrature for Gamma, the mass-function series for Poisson.
  double analytic_worst = 0.0;
  for (const auto& [a, b] : gamma_all) {
    const auto q = gamma_moments_quadrature(a, b);
    const auto c = nmm_gamma_shape_rate(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b));
    analytic_worst = std::max({analytic_worst, std::abs(q.first - c.m(0)) / std::abs(c.m(0)),
                               std::abs(q.second - c.s(0)) / std::abs(c.s(0))});
  }
  for (const auto& [l, unused] : poisson_all) {
    const auto q = poisson_moments_series(l);
    const auto c = nmm_poisson(poisson_from_rate(Matrix::Constant(1, 1, l)));
    analytic_worst = std::max({analytic_worst, std::abs(q.first - c.m(0)) / std::abs(c.m(0)),
                               std::abs(q.second - c.s(0)) / std::abs(c.s(0))});
  }
  detail("analytic references over all " + std::to_string(gamma_all.size() + poisson_all.size()) +
         " candidates: max relative difference " + fmt("%.3g", analytic_worst) + " (limit 1e-8)");

  const double secs = seconds_since(t0);
  detail("runtime " + fmt("%.1f", secs) + " s (limit 300 s)");
  const bool pass = all_pass(lmm_reports) && all_pass(gamma) && all_pass(poisson) && analytic_worst <= 1e-8 &&
                    secs < 300.0;
  return {pass, "exact operations match sampling and analytic references on 1000 draws each"};
}

// 2. Gaussian activations against sampling on the mean x variance grid.
Outcome criterion_2() {
  const auto t0 = Clock::now();
  OracleOptions opt;
  opt.n = 1'000'000;
  opt.seed = 7;
  const auto grid = gaussian_grid();
  const auto sig = verify_nmm(Family::Gaussian, Activation::Sigmoid, grid, opt);
  const auto tanh = verify_nmm(Family::Gaussian, Activation::Tanh, grid, opt);
  const auto halved =
      verify_nmm(Family::Gaussian, Activation::Sigmoid, grid, opt, NmmConstants::with_omega(SigmoidOmega::Halved));
  auto line = [](const char* name, const std::vector<OracleReport>& r) {
    detail(std::string(name) + ": " + std::to_string(r.size() - count_fail(r)) + "/" + std::to_string(r.size()) +
           " within 0.03, max mean error " + fmt("%.4f", max_abs_error(r, "mean")) + ", max variance error " +
           fmt("%.4f", max_abs_error(r, "var")));
  };
  line("sigmoid", sig);
  line("tanh", tanh);
  line("sigmoid, halved offset", halved);
  const double secs = seconds_since(t0);
  detail("runtime " + fmt("%.1f", secs) + " s (limit 300 s)");
  const bool pass = all_pass(sig) && all_pass(tanh) && !all_pass(halved) && secs < 300.0;
  return {pass, "sigmoid and tanh closed forms within 0.03 on the grid; the halved offset fails it"};
}

// 3. Finite differences on a 4-unit step with an output layer and BCE.
Outcome criterion_3() {
  const auto t0 = Clock::now();
  bool pass = true;
  double worst = 0.0;
  std::size_t entries = 0, excluded = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(300 + seed);
    CellParams cell = init_cell(rng(), 4, 3, 1e-3);
    cell.visit("cell", [&](const std::string& name, Matrix& m) {
      m = name.ends_with("_rho") ? uniform(rng, m.rows(), m.cols(), -5, -2) : uniform(rng, m.rows(), m.cols(), -1, 1);
    });
    OutputLayerParams out = init_output(rng(), 3, 4, 1e-2);
    out.v_mean = uniform(rng, 3, 4, -1, 1);
    const Matrix xm = uniform(rng, 3, 1, -1, 1), xs = uniform(rng, 3, 1, 0.01, 0.1);
    const Matrix hm = uniform(rng, 4, 1, -0.5, 0.5), hs = uniform(rng, 4, 1, 0.01, 0.1);
    const Matrix target = uniform(rng, 3, 1, 0, 1);

    std::vector<ad::CheckedParam> params;
    cell.visit("cell", [&](const std::string& n, const Matrix& m) { params.push_back({n, m}); });
    out.visit("out", [&](const std::string& n, const Matrix& m) { params.push_back({n, m}); });
    const ad::TapeProgram prog = [&](ad::Tape& t, std::span<const ad::Var> leaves) {
      CellParams c = cell;
      OutputLayerParams o = out;
      TapeOps ops(t);
      std::size_t i = 0;
      auto bind = [&](const std::string&, Matrix& m) {
        m = leaves[i].value();
        ops.bindings[&m] = leaves[i++];
      };
      c.visit("cell", bind);
      o.visit("out", bind);
      const auto pc = prepare_cell(ops, c, true);
      const auto po = prepare_output(ops, o);
      const CellInput<ad::Var> x{t.constant(xm), t.constant(xs)};
      const auto h = cell_step(ops, pc, &x, Moments<ad::Var>{t.constant(hm), t.constant(hs)}, CellRules{});
      const auto y = output_layer(ops, po, h);
      return t.record(ad::Op::BceSum, {y.m, t.constant(target)});
    };
    ad::GradCheckOptions gopt;
    gopt.h = 1e-5;
    gopt.rel_tol = 1e-4;
    const auto rep = ad::grad_check(prog, params, gopt);
    pass = pass && rep.pass && rep.excluded == 0;
    worst = std::max(worst, rep.max_rel_error);
    entries += rep.entries.size();
    excluded += rep.excluded;
  }
  const double secs = seconds_since(t0);
  detail(std::to_string(entries) + " gradient entries over 5 draws, " + std::to_string(excluded) +
         " excluded, max relative error " + fmt("%.3g", worst) + " (limit 1e-4)");
  detail("runtime " + fmt("%.2f", secs) + " s (limit 60 s)");
  return {pass && worst < 1e-4 && secs < 60.0, "parameter gradients of a 4-unit step plus BCE match central differences"};
}

// 4. Zero variances reduce the network to a deterministic GRU.
Outcome criterion_4() {
  std::mt19937_64 rng(400);
  double step_worst = 0.0;
  bool zero_var = true;
  for (int trial = 0; trial < 100; ++trial) {
    CellParams c = init_cell(rng(), 8, 5, 1e-3);
    c.visit("c", [&](const std::string& name, Matrix& m) {
      if (name.ends_with("_rho")) {
        m.setConstant(-kInf);
      } else {
        m = uniform(rng, m.rows(), m.cols(), -1, 1);
      }
    });
    const PointGru g = point_gru_means(c);
    const Matrix x = uniform(rng, 5, 1, -1, 1), h = uniform(rng, 8, 1, -1, 1);
    const CellState next = cell_step(MomentTensor::deterministic(x), CellState{h, Matrix::Zero(8, 1)}, c);
    const auto ref = gru_step(g, std::vector<double>(x.data(), x.data() + 5), std::vector<double>(h.data(), h.data() + 8));
    for (int i = 0; i < 8; ++i) step_worst = std::max(step_worst, std::abs(next.h_m(i) - ref[static_cast<std::size_t>(i)]));
    zero_var = zero_var && next.h_s.isZero(0.0);
  }
  detail("100 random single steps: max |difference| " + fmt("%.3g", step_worst));

  NetworkConfig cfg;
  cfg.hidden = 16;
  cfg.input = 36;
  cfg.input_len = 50;
  cfg.output_len = 50;
  NetworkParams p = init_params(cfg, 4);
  p.visit([&](const std::string& name, Matrix& m) {
    if (name.ends_with("_rho")) {
      m.setConstant(-kInf);
    } else {
      m = uniform(rng, m.rows(), m.cols(), -1, 1);
    }
  });
  std::vector<Matrix> frames;
  for (int t = 0; t < 100; ++t) frames.push_back(uniform(rng, 36, 1, 0, 1));
  const UnrollResult u = unroll(frames, cfg, p);
  const auto ref = bench::DeterministicGru(p, cfg).forward(frames);
  double unroll_worst = 0.0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    unroll_worst = std::max(unroll_worst, (u.prediction[t].m - ref[t]).cwiseAbs().maxCoeff());
    zero_var = zero_var && u.prediction[t].s.isZero(0.0);
  }
  detail("100-step unroll (50 encoder + 50 predictor): max |difference| " + fmt("%.3g", unroll_worst) +
         ", variances exactly zero: " + (zero_var ? "yes" : "no"));
  return {step_worst <= 1e-12 && unroll_worst <= 1e-12 && zero_var,
          "zero-variance mean channel matches a deterministic GRU within 1e-12"};
}

// 5. Predictive variance grows with the distance from the training trajectory.
Outcome criterion_5(const fs::path& work) {
  const fs::path config = fs::path(SPGRU_SOURCE_DIR) / "configs" / "deviation_desk.ini";
  RunConfig base = load_run_config(config);
  int ok[3] = {0, 0, 0};
  const char* suites[3] = {"angle", "speed", "noise"};
  bool within_budget = base.train.epochs * base.train.steps_per_epoch <= 2000 && base.data.frame_size == 32 &&
                       base.model.hidden == 128;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const fs::path dir = work / "criterion_5" / ("seed_" + std::to_string(seed));
    fs::remove_all(dir);
    CommandOptions opt;
    opt.config = config;
    opt.seed = seed;
    opt.out = dir;
    std::ostringstream out, err;
    const auto t0 = Clock::now();
    if (cmd_train(opt, out, err) != kExitOk) {
      detail("seed " + std::to_string(seed) + ": training failed: " + err.str());
      return {false, "training failed"};
    }
    const double train_secs = seconds_since(t0);
    within_budget = within_budget && train_secs <= 1800.0;
    if (cmd_eval_deviation(opt, out, err) != kExitOk) {
      detail("seed " + std::to_string(seed) + ": evaluation failed: " + err.str());
      return {false, "evaluation failed"};
    }
    RunConfig rc = base;
    override_seed(rc, seed);
    const Checkpoint model = load_checkpoint(dir / "model.spgru");
    const auto sets = deviation_suite(rc.data, rc.eval.count);
    std::string line = "seed " + std::to_string(seed) + " (train " + fmt("%.0f", train_secs) + " s):";
    for (int s = 0; s < 3; ++s) {
      const auto rows = evaluate_deviation(model, sets, suites[s]);
      const bool inc = strictly_increasing(rows);
      ok[s] += inc ? 1 : 0;
      line += std::string(" ") + suites[s] + (inc ? " increasing [" : " not increasing [");
      for (std::size_t i = 0; i < rows.size(); ++i) line += (i ? " " : "") + fmt("%.6g", rows[i].metric.average);
      line += "]";
    }
    detail(line);
  }
  detail(std::string("strictly increasing: angle ") + std::to_string(ok[0]) + "/5, speed " + std::to_string(ok[1]) +
         "/5, noise " + std::to_string(ok[2]) + "/5 (need 4/5 each)");
  return {within_budget && ok[0] >= 4 && ok[1] >= 4 && ok[2] >= 4,
          "average summed variance increases with angle, speed and noise deviation"};
}

// 6. Overfitting one sequence, and the loss unit.
Outcome criterion_6() {
  NetworkConfig net;
  net.hidden = 2;
  net.input = 32 * 32;
  TrajectoryConfig data;
  data.frame_size = 32;
  TrainConfig tc;
  tc.epochs = 500;
  tc.batch_size = 1;
  const TrainResult r = train(net, data, tc);
  const double first = r.log.front().loss, last = r.log.back().loss;
  detail("2 hidden units, one 32x32 sequence, 500 steps: loss " + fmt("%.2f", first) + " -> " + fmt("%.2f", last) +
         " (" + fmt("%.1f", 100.0 * (1.0 - last / first)) + "% decrease, need 50%)");

  std::mt19937_64 rng(6);
  Matrix targets(4096, 1);
  for (Eigen::Index i = 0; i < targets.size(); ++i) targets(i) = static_cast<double>(rng() % 2);
  const MomentTensor half{Matrix::Constant(4096, 1, 0.5), Matrix::Zero(4096, 1)};
  const double per_frame = loss_bce_mean({half, half, half}, {targets, targets, targets});
  const double unit_error = std::abs(per_frame - 4096.0 * std::log(2.0));
  detail("uniform prediction on 64x64 frames: " + fmt("%.9f", per_frame) + " per frame, |error| " +
         fmt("%.3g", unit_error));
  return {r.log.size() == 500 && last <= 0.5 * first && unit_error < 1e-6,
          "overfit loss halves within 500 steps and the per-frame loss unit is 4096 log 2"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 7. Two identical runs produce identical files.
Outcome criterion_7(const fs::path& work) {
  const fs::path config = fs::path(SPGRU_SOURCE_DIR) / "configs" / "determinism.ini";
  const fs::path dirs[2] = {work / "criterion_7" / "a", work / "criterion_7" / "b"};
  for (const auto& dir : dirs) {
    fs::remove_all(dir);
    CommandOptions opt;
    opt.config = config;
    opt.out = dir;
    std::ostringstream out, err;
    if (cmd_train(opt, out, err) != kExitOk || cmd_eval_deviation(opt, out, err) != kExitOk) {
      detail("run failed: " + err.str());
      return {false, "run failed"};
    }
  }
  bool same = true;
  std::size_t files = 0;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dirs[0])) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    if (name == "timing.log") continue;  // wall-clock times
    ++files;
    const bool eq = fs::exists(dirs[1] / name) && slurp(dirs[0] / name) == slurp(dirs[1] / name);
    detail(name + (eq ? ": identical" : ": DIFFERS"));
    same = same && eq;
  }
  return {same && files >= 5, "train plus eval-deviation outputs are byte-identical across runs"};
}

// 8. Forward cost relative to a deterministic GRU of the same size.
Outcome criterion_8() {
  NetworkConfig cfg;  // 10 + 10 frames, 128 hidden units, 32x32
  const NetworkParams params = init_params(cfg, 8);
  TrajectoryConfig data;
  const auto frames = generate(data, 1).frames[0];
  const bench::DeterministicGru gru(params, cfg);
  ValueOps ops{cfg.constants(), {}};
  const auto net = prepare_network(ops, params);

  // Best of 7 batches, each at least 0.2 s long.
  auto time_per_call = [](auto&& fn) {
    double best = kInf;
    for (int rep = 0; rep < 7; ++rep) {
      std::size_t calls = 0;
      const auto t0 = Clock::now();
      double elapsed = 0.0;
      do {
        fn();
        ++calls;
        elapsed = seconds_since(t0);
      } while (elapsed < 0.2);
      best = std::min(best, elapsed / static_cast<double>(calls));
    }
    return best;
  };
  volatile double sink = 0.0;
  const double det = time_per_call([&] { sink = sink + gru.forward(frames).back()(0); });
  const double sp = time_per_call([&] { sink = sink + unroll(ops, net, cfg, frames).prediction.back().m(0); });
  const double sp_prep = time_per_call([&] { sink = sink + unroll(frames, cfg, params).prediction.back().m(0); });
  const double ratio = sp / det;
  detail("deterministic GRU " + fmt("%.3f", det * 1e3) + " ms, SP-GRU " + fmt("%.3f", sp * 1e3) + " ms, ratio " +
         fmt("%.2f", ratio) + " (limit 5)");
  detail("SP-GRU including weight preparation " + fmt("%.3f", sp_prep * 1e3) + " ms, ratio " +
         fmt("%.2f", sp_prep / det));
  return {ratio < 5.0, "sampling-free forward pass costs less than 5x a deterministic GRU"};
}

const char* kTitles[9] = {"",
                          "oracle equivalence (exact ops)",
                          "approximation quality (Gaussian activations)",
                          "gradient correctness",
                          "degenerate equivalence",
                          "deviation trend",
                          "overfit and loss units",
                          "determinism",
                          "sampling-free performance"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spgru acceptance runner"};
  std::vector<int> criteria;
  fs::path work = fs::temp_directory_path() / "spgru-acceptance";
  app.add_option("--criterion", criteria, "criterion number 1-8 (repeatable; default all)")->check(CLI::Range(1, 8));
  app.add_option("--work-dir", work, "directory for training runs");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8};

  bool all = true;
  for (int c : criteria) {
    std::cout << "criterion " << c << ": " << kTitles[c] << '\n' << std::flush;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      switch (c) {
        case 1: o = criterion_1(); break;
        case 2: o = criterion_2(); break;
        case 3: o = criterion_3(); break;
        case 4: o = criterion_4(); break;
        case 5: o = criterion_5(work); break;
        case 6: o = criterion_6(); break;
        case 7: o = criterion_7(work); break;
        case 8: o = criterion_8(); break;
      }
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c << ": " << o.summary << " ("
              << fmt("%.1f", seconds_since(t0)) << " s)\n"
              << std::flush;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
