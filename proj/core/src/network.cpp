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

#include "spgru/network.hpp"

#include <cmath>
#include <sstream>

#include "random_util.hpp"
#include "spgru/error.hpp"

namespace spgru {

std::string_view to_string(Mode v) {
  switch (v) {
    case Mode::Autoencoder: return "autoencoder";
    case Mode::Predictor: return "predictor";
    case Mode::Composite: return "composite";
  }
  return "?";
}
std::string_view to_string(CellVarianceRule v) {
  return v == CellVarianceRule::Corrected ? "corrected" : "literal";
}
std::string_view to_string(GateProductRule v) {
  return v == GateProductRule::FullIndependent ? "full_independent" : "simplified";
}
std::string_view to_string(LossKind v) { return v == LossKind::BceMean ? "bce_mean" : "gaussian_nll"; }
std::string_view to_string(SigmoidOmega v) { return v == SigmoidOmega::Main ? "main" : "halved"; }

Mode parse_mode(std::string_view s) {
  if (s == "autoencoder") return Mode::Autoencoder;
  if (s == "predictor") return Mode::Predictor;
  if (s == "composite") return Mode::Composite;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}
CellVarianceRule parse_cell_variance_rule(std::string_view s) {
  if (s == "corrected") return CellVarianceRule::Corrected;
  if (s == "literal") return CellVarianceRule::Literal;
  throw ConfigError("unknown cell_variance_rule '" + std::string(s) + "'");
}
GateProductRule parse_gate_product_rule(std::string_view s) {
  if (s == "full_independent") return GateProductRule::FullIndependent;
  if (s == "simplified") return GateProductRule::Simplified;
  throw ConfigError("unknown gate_product_rule '" + std::string(s) + "'");
}
LossKind parse_loss_kind(std::string_view s) {
  if (s == "bce_mean") return LossKind::BceMean;
  if (s == "gaussian_nll") return LossKind::GaussianNll;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}
SigmoidOmega parse_sigmoid_omega(std::string_view s) {
  if (s == "main") return SigmoidOmega::Main;
  if (s == "halved") return SigmoidOmega::Halved;
  throw ConfigError("unknown sigmoid_omega '" + std::string(s) + "'");
}

void NetworkConfig::validate() const {
  if (input_len < 1) throw ConfigError("input_len must be >= 1");
  if (output_len < 1) throw ConfigError("output_len must be >= 1");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (input < 1) throw ConfigError("input size must be >= 1");
}

std::string NetworkConfig::canonical() const {
  std::ostringstream os;
  os << "mode=" << to_string(mode) << ";input_len=" << input_len << ";output_len=" << output_len
     << ";hidden=" << hidden << ";input=" << input
     << ";cell_variance_rule=" << to_string(cell_variance_rule)
     << ";gate_product_rule=" << to_string(gate_product_rule) << ";loss=" << to_string(loss)
     << ";sigmoid_omega=" << to_string(sigmoid_omega);
  return os.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t NetworkConfig::hash() const { return fnv1a64(canonical()); }

double softplus(double rho) {
  return rho > 0.0 ? rho + std::log1p(std::exp(-rho)) : std::log1p(std::exp(rho));
}

double softplus_inverse(double s) {
  if (!(s > 0.0)) throw DomainError("softplus_inverse needs s > 0", 0, s);
  return s > 30.0 ? s + std::log(-std::expm1(-s)) : std::log(std::expm1(s));
}

std::size_t NetworkParams::scalar_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

namespace {

Matrix uniform(detail::Rng& rng, Eigen::Index rows, Eigen::Index cols, double k) {
  boost::random::uniform_real_distribution<double> dist(-k, k);
  Matrix m(rows, cols);
  // Row-major fill so the draw order does not depend on Eigen's storage.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

void init_gate(detail::Rng& rng, GateParams& g, Eigen::Index hidden, Eigen::Index input, double rho) {
  const double ku = input > 0 ? 1.0 / std::sqrt(static_cast<double>(input)) : 0.0;
  const double kw = 1.0 / std::sqrt(static_cast<double>(hidden));
  g.u_mean = uniform(rng, hidden, input, ku);
  g.u_rho = Matrix::Constant(hidden, input, rho);
  g.w_mean = uniform(rng, hidden, hidden, kw);
  g.w_rho = Matrix::Constant(hidden, hidden, rho);
  g.b_mean = Matrix::Zero(hidden, 1);
  g.b_rho = Matrix::Constant(hidden, 1, rho);
}

}  // namespace

CellParams init_cell(std::uint64_t seed, Eigen::Index hidden, Eigen::Index input, double init_s) {
  if (!(init_s > 0.0)) throw ConfigError("init variance must be > 0");
  detail::Rng rng(seed);
  const double rho = softplus_inverse(init_s);
  CellParams c;
  c.hidden = hidden;
  c.input = input;
  init_gate(rng, c.reset, hidden, input, rho);
  init_gate(rng, c.update, hidden, input, rho);
  init_gate(rng, c.candidate, hidden, input, rho);
  return c;
}

OutputLayerParams init_output(std::uint64_t seed, Eigen::Index out, Eigen::Index hidden, double init_s) {
  if (!(init_s > 0.0)) throw ConfigError("init variance must be > 0");
  detail::Rng rng(seed);
  const double rho = softplus_inverse(init_s);
  OutputLayerParams o;
  o.v_mean = uniform(rng, out, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
  o.v_rho = Matrix::Constant(out, hidden, rho);
  o.c_mean = Matrix::Zero(out, 1);
  o.c_rho = Matrix::Constant(out, 1, rho);
  return o;
}

NetworkParams init_params(const NetworkConfig& cfg, std::uint64_t seed, double init_s) {
  cfg.validate();
  NetworkParams p;
  p.encoder = init_cell(detail::mix_seed(seed, 0), cfg.hidden, cfg.input, init_s);
  if (cfg.has_reconstruction()) {
    p.reconstruct = HeadParams{init_cell(detail::mix_seed(seed, 1), cfg.hidden, 0, init_s),
                               init_output(detail::mix_seed(seed, 2), cfg.input, cfg.hidden, init_s)};
  }
  if (cfg.has_prediction()) {
    p.predict = HeadParams{init_cell(detail::mix_seed(seed, 3), cfg.hidden, 0, init_s),
                           init_output(detail::mix_seed(seed, 4), cfg.input, cfg.hidden, init_s)};
  }
  return p;
}

namespace {

void expect_shape(const Matrix& m, Eigen::Index r, Eigen::Index c, const std::string& name) {
  if (m.rows() != r || m.cols() != c) {
    throw ShapeError(name + ": expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void check_cell(const CellParams& c, Eigen::Index hidden, Eigen::Index input, const std::string& name) {
  if (c.hidden != hidden || c.input != input) throw ShapeError(name + ": cell dimensions differ from config");
  for (const GateParams* g : {&c.reset, &c.update, &c.candidate}) {
    expect_shape(g->u_mean, hidden, input, name + ".u_mean");
    expect_shape(g->u_rho, hidden, input, name + ".u_rho");
    expect_shape(g->w_mean, hidden, hidden, name + ".w_mean");
    expect_shape(g->w_rho, hidden, hidden, name + ".w_rho");
    expect_shape(g->b_mean, hidden, 1, name + ".b_mean");
    expect_shape(g->b_rho, hidden, 1, name + ".b_rho");
  }
}

void check_output(const OutputLayerParams& o, Eigen::Index out, Eigen::Index hidden, const std::string& name) {
  expect_shape(o.v_mean, out, hidden, name + ".v_mean");
  expect_shape(o.v_rho, out, hidden, name + ".v_rho");
  expect_shape(o.c_mean, out, 1, name + ".c_mean");
  expect_shape(o.c_rho, out, 1, name + ".c_rho");
}

}  // namespace

void check_shapes(const NetworkParams& p, const NetworkConfig& cfg) {
  check_cell(p.encoder, cfg.hidden, cfg.input, "encoder");
  if (cfg.has_reconstruction() != p.reconstruct.has_value()) {
    throw ShapeError("reconstruction head presence does not match mode");
  }
  if (cfg.has_prediction() != p.predict.has_value()) {
    throw ShapeError("prediction head presence does not match mode");
  }
  if (p.reconstruct) {
    check_cell(p.reconstruct->cell, cfg.hidden, 0, "reconstruct.cell");
    check_output(p.reconstruct->output, cfg.input, cfg.hidden, "reconstruct.output");
  }
  if (p.predict) {
    check_cell(p.predict->cell, cfg.hidden, 0, "predict.cell");
    check_output(p.predict->output, cfg.input, cfg.hidden, "predict.output");
  }
}

// ---------------------------------------------------------------------------
// Backends

namespace {

template <class Kernel>
Matrix apply_kernel(const Matrix& m, const Matrix& s, const NmmConstants& k, NmmStats& stats, Kernel kernel) {
  if (m.rows() != s.rows() || m.cols() != s.cols()) throw ShapeError("moment kernel: shape mismatch");
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const KernelValue v = kernel(m(i), s(i), k);
    if (v.clamped) ++stats.clamped;
    out(i) = v.value;
  }
  return out;
}

}  // namespace

Matrix ValueOps::softplus(const Matrix& a) {
  return a.unaryExpr([](double x) { return spgru::softplus(x); });
}
Matrix ValueOps::sigmoid_mean(const Matrix& m, const Matrix& s) {
  return apply_kernel(m, s, constants, stats, spgru::sigmoid_mean);
}
Matrix ValueOps::sigmoid_var(const Matrix& m, const Matrix& s) {
  return apply_kernel(m, s, constants, stats, spgru::sigmoid_var);
}
Matrix ValueOps::tanh_mean(const Matrix& m, const Matrix& s) {
  return apply_kernel(m, s, constants, stats, spgru::tanh_mean);
}
Matrix ValueOps::tanh_var(const Matrix& m, const Matrix& s) {
  return apply_kernel(m, s, constants, stats, spgru::tanh_var);
}

ad::Var TapeOps::param(const Matrix& m) {
  auto it = bindings.find(&m);
  if (it != bindings.end()) return it->second;
  const ad::Var v = tape.leaf(m);
  bindings.emplace(&m, v);
  return v;
}

// ---------------------------------------------------------------------------
// Model

namespace {

template <class Ops>
PreparedGate<typename Ops::Tensor> prepare_gate(Ops& ops, const GateParams& g, bool has_input,
                                                bool input_variance) {
  using T = typename Ops::Tensor;
  PreparedGate<T> out;
  if (has_input) {
    out.u_m = ops.param(g.u_mean);
    out.u_s = ops.softplus(ops.param(g.u_rho));
    if (input_variance) out.u_total = ops.add(out.u_s, ops.square(out.u_m));
  }
  out.w_m = ops.param(g.w_mean);
  out.w_s = ops.softplus(ops.param(g.w_rho));
  out.w_total = ops.add(out.w_s, ops.square(out.w_m));
  out.b_m = ops.param(g.b_mean);
  out.b_s = ops.softplus(ops.param(g.b_rho));
  return out;
}

/// Pre-activation moments of one gate:
///   m = U_m x_m + W_m h_m + b_m
///   s = (U_s + U_m^2) x_s + U_s x_m^2 + (W_s + W_m^2) h_s + W_s h_m^2 + b_s
template <class Ops>
Moments<typename Ops::Tensor> preactivation(Ops& ops, const PreparedGate<typename Ops::Tensor>& g,
                                            const CellInput<typename Ops::Tensor>* x,
                                            const Moments<typename Ops::Tensor>& rec) {
  auto m = ops.add(ops.matmul(g.w_m, rec.m), g.b_m);
  auto s = ops.add(ops.add(ops.matmul(g.w_total, rec.s), ops.matmul(g.w_s, ops.square(rec.m))), g.b_s);
  if (x) {
    m = ops.add(ops.matmul(g.u_m, x->m), m);
    s = ops.add(ops.matmul(g.u_s, ops.square(x->m)), s);
    if (x->s) {
      if (!g.u_total) throw ShapeError("cell was prepared without input-variance support");
      s = ops.add(ops.matmul(*g.u_total, *x->s), s);
    }
  }
  return {m, s};
}

template <class Ops>
Moments<typename Ops::Tensor> sigmoid_moments(Ops& ops, const Moments<typename Ops::Tensor>& o) {
  return {ops.sigmoid_mean(o.m, o.s), ops.sigmoid_var(o.m, o.s)};
}

template <class Ops>
Moments<typename Ops::Tensor> tanh_moments(Ops& ops, const Moments<typename Ops::Tensor>& o) {
  return {ops.tanh_mean(o.m, o.s), ops.tanh_var(o.m, o.s)};
}

/// Moments of the elementwise product of independent factors.
template <class Ops>
Moments<typename Ops::Tensor> product(Ops& ops, const Moments<typename Ops::Tensor>& u,
                                      const Moments<typename Ops::Tensor>& v, GateProductRule rule) {
  auto m = ops.mul(u.m, v.m);
  auto s = ops.mul(ops.square(u.m), v.s);
  if (rule == GateProductRule::FullIndependent) {
    s = ops.add(s, ops.mul(u.s, ops.add(v.s, ops.square(v.m))));
  }
  return {m, s};
}

}  // namespace

template <class Ops>
PreparedCell<typename Ops::Tensor> prepare_cell(Ops& ops, const CellParams& p, bool input_variance) {
  PreparedCell<typename Ops::Tensor> c;
  c.hidden = p.hidden;
  c.input = p.input;
  const bool has_input = p.input > 0;
  c.reset = prepare_gate(ops, p.reset, has_input, input_variance);
  c.update = prepare_gate(ops, p.update, has_input, input_variance);
  c.candidate = prepare_gate(ops, p.candidate, has_input, input_variance);
  return c;
}

template <class Ops>
PreparedOutput<typename Ops::Tensor> prepare_output(Ops& ops, const OutputLayerParams& p) {
  PreparedOutput<typename Ops::Tensor> o;
  o.v_m = ops.param(p.v_mean);
  o.v_s = ops.softplus(ops.param(p.v_rho));
  o.v_total = ops.add(o.v_s, ops.square(o.v_m));
  o.c_m = ops.param(p.c_mean);
  o.c_s = ops.softplus(ops.param(p.c_rho));
  return o;
}

template <class Ops>
PreparedNetwork<typename Ops::Tensor> prepare_network(Ops& ops, const NetworkParams& p) {
  PreparedNetwork<typename Ops::Tensor> n;
  n.encoder = prepare_cell(ops, p.encoder, false);
  if (p.reconstruct) {
    n.reconstruct.emplace();
    n.reconstruct->cell = prepare_cell(ops, p.reconstruct->cell, false);
    n.reconstruct->output = prepare_output(ops, p.reconstruct->output);
  }
  if (p.predict) {
    n.predict.emplace();
    n.predict->cell = prepare_cell(ops, p.predict->cell, false);
    n.predict->output = prepare_output(ops, p.predict->output);
  }
  return n;
}

template <class Ops>
Moments<typename Ops::Tensor> combine_state(Ops& ops, const Moments<typename Ops::Tensor>& z,
                                            const Moments<typename Ops::Tensor>& cand,
                                            const Moments<typename Ops::Tensor>& prev,
                                            const CellRules& rules) {
  auto keep = ops.add_scalar(ops.scale(z.m, -1.0), 1.0);
  auto m = ops.add(ops.mul(keep, cand.m), ops.mul(z.m, prev.m));
  if (rules.variance == CellVarianceRule::Literal) {
    // (1 - z_s)^2 * cand_m + z_s^2 * prev_s, clamped to stay a variance.
    auto keep_s = ops.add_scalar(ops.scale(z.s, -1.0), 1.0);
    auto s = ops.add(ops.mul(ops.square(keep_s), cand.m), ops.mul(ops.square(z.s), prev.s));
    return {m, ops.clamp_min(s, 0.0)};
  }
  // Var[(1 - z) c + z h] for independent z, c, h:
  //   (1 - z_m)^2 c_s + z_m^2 h_s + z_s (c_s + h_s + (h_m - c_m)^2)
  auto s = ops.add(ops.mul(ops.square(keep), cand.s), ops.mul(ops.square(z.m), prev.s));
  if (rules.product == GateProductRule::FullIndependent) {
    auto spread = ops.add(ops.add(cand.s, prev.s), ops.square(ops.sub(prev.m, cand.m)));
    s = ops.add(s, ops.mul(z.s, spread));
  }
  return {m, s};
}

template <class Ops>
Moments<typename Ops::Tensor> cell_step(Ops& ops, const PreparedCell<typename Ops::Tensor>& cell,
                                        const CellInput<typename Ops::Tensor>* x,
                                        const Moments<typename Ops::Tensor>& prev,
                                        const CellRules& rules) {
  if (x && cell.input == 0) throw ShapeError("cell_step: input given to an input-free cell");
  if (!x && cell.input > 0) throw ShapeError("cell_step: cell expects an input");
  const auto r = sigmoid_moments(ops, preactivation(ops, cell.reset, x, prev));
  const auto z = sigmoid_moments(ops, preactivation(ops, cell.update, x, prev));
  const auto gated = product(ops, r, prev, rules.product);
  const auto cand = tanh_moments(ops, preactivation(ops, cell.candidate, x, gated));
  return combine_state(ops, z, cand, prev, rules);
}

template <class Ops>
Moments<typename Ops::Tensor> output_layer(Ops& ops, const PreparedOutput<typename Ops::Tensor>& out,
                                           const Moments<typename Ops::Tensor>& h) {
  auto m = ops.add(ops.matmul(out.v_m, h.m), out.c_m);
  auto s = ops.add(ops.add(ops.matmul(out.v_total, h.s), ops.matmul(out.v_s, ops.square(h.m))), out.c_s);
  return sigmoid_moments(ops, Moments<typename Ops::Tensor>{m, s});
}

template <class Ops>
Unrolled<typename Ops::Tensor> unroll(Ops& ops, const PreparedNetwork<typename Ops::Tensor>& net,
                                      const NetworkConfig& cfg, std::span<const Matrix> frames) {
  using T = typename Ops::Tensor;
  if (frames.size() < static_cast<std::size_t>(cfg.input_len)) {
    throw ShapeError("unroll: need " + std::to_string(cfg.input_len) + " input frames, got " +
                     std::to_string(frames.size()));
  }
  const CellRules rules{cfg.cell_variance_rule, cfg.gate_product_rule};
  Moments<T> state{ops.zeros(cfg.hidden, 1), ops.zeros(cfg.hidden, 1)};
  for (int t = 0; t < cfg.input_len; ++t) {
    const Matrix& f = frames[static_cast<std::size_t>(t)];
    if (f.rows() != cfg.input || f.cols() != 1) {
      throw ShapeError("unroll: frame " + std::to_string(t) + " is " + std::to_string(f.rows()) + "x" +
                       std::to_string(f.cols()) + ", expected " + std::to_string(cfg.input) + "x1");
    }
    const CellInput<T> x{ops.constant(f), std::nullopt};
    state = cell_step(ops, net.encoder, &x, state, rules);
  }

  Unrolled<T> out;
  auto decode = [&](const PreparedHead<T>& head, int steps, std::vector<Moments<T>>& dst) {
    Moments<T> s = state;
    for (int t = 0; t < steps; ++t) {
      s = cell_step(ops, head.cell, static_cast<const CellInput<T>*>(nullptr), s, rules);
      dst.push_back(output_layer(ops, head.output, s));
    }
  };
  if (cfg.has_reconstruction()) {
    if (!net.reconstruct) throw ConfigError("mode needs a reconstruction head");
    decode(*net.reconstruct, cfg.input_len, out.reconstruction);
  }
  if (cfg.has_prediction()) {
    if (!net.predict) throw ConfigError("mode needs a prediction head");
    decode(*net.predict, cfg.output_len, out.prediction);
  }
  return out;
}

#define SPGRU_INSTANTIATE(OPS)                                                                        \
  template PreparedCell<OPS::Tensor> prepare_cell<OPS>(OPS&, const CellParams&, bool);                \
  template PreparedOutput<OPS::Tensor> prepare_output<OPS>(OPS&, const OutputLayerParams&);           \
  template PreparedNetwork<OPS::Tensor> prepare_network<OPS>(OPS&, const NetworkParams&);             \
  template Moments<OPS::Tensor> cell_step<OPS>(OPS&, const PreparedCell<OPS::Tensor>&,                \
                                               const CellInput<OPS::Tensor>*,                         \
                                               const Moments<OPS::Tensor>&, const CellRules&);        \
  template Moments<OPS::Tensor> combine_state<OPS>(OPS&, const Moments<OPS::Tensor>&,                 \
                                                   const Moments<OPS::Tensor>&,                       \
                                                   const Moments<OPS::Tensor>&, const CellRules&);    \
  template Moments<OPS::Tensor> output_layer<OPS>(OPS&, const PreparedOutput<OPS::Tensor>&,           \
                                                  const Moments<OPS::Tensor>&);                       \
  template Unrolled<OPS::Tensor> unroll<OPS>(OPS&, const PreparedNetwork<OPS::Tensor>&,               \
                                             const NetworkConfig&, std::span<const Matrix>);

SPGRU_INSTANTIATE(ValueOps)
SPGRU_INSTANTIATE(TapeOps)

#undef SPGRU_INSTANTIATE

// ---------------------------------------------------------------------------
// Value-level API

CellState cell_step(const MomentTensor& x, const CellState& prev, const CellParams& p,
                    const CellRules& rules, const NmmConstants& k) {
  validate(x);
  if (x.m.rows() != p.input || x.m.cols() != 1) throw ShapeError("cell_step: input does not match cell");
  if (prev.h_m.rows() != p.hidden || prev.h_s.rows() != p.hidden) {
    throw ShapeError("cell_step: state does not match cell");
  }
  for (Eigen::Index i = 0; i < prev.h_s.size(); ++i) {
    if (!(prev.h_s(i) >= 0.0)) throw DomainError("state variance must be >= 0", i, prev.h_s(i));
  }
  ValueOps ops{k, {}};
  const bool input_variance = !x.s.isZero(0.0);
  const PreparedCell<Matrix> cell = prepare_cell(ops, p, input_variance);
  const CellInput<Matrix> in{x.m, input_variance ? std::optional<Matrix>(x.s) : std::nullopt};
  const Moments<Matrix> next =
      cell_step(ops, cell, p.input > 0 ? &in : nullptr, Moments<Matrix>{prev.h_m, prev.h_s}, rules);
  return {next.m, next.s};
}

UnrollResult unroll(std::span<const Matrix> frames, const NetworkConfig& cfg, const NetworkParams& p) {
  cfg.validate();
  check_shapes(p, cfg);
  ValueOps ops{cfg.constants(), {}};
  const PreparedNetwork<Matrix> net = prepare_network(ops, p);
  Unrolled<Matrix> u = unroll(ops, net, cfg, frames);
  UnrollResult r;
  for (auto& m : u.reconstruction) r.reconstruction.emplace_back(std::move(m.m), std::move(m.s));
  for (auto& m : u.prediction) r.prediction.emplace_back(std::move(m.m), std::move(m.s));
  r.clamped = ops.stats.clamped;
  return r;
}

std::vector<Matrix> reconstruction_targets(std::span<const Matrix> frames, const NetworkConfig& cfg) {
  if (frames.size() < static_cast<std::size_t>(cfg.input_len)) throw ShapeError("too few frames for targets");
  std::vector<Matrix> out;
  for (int t = cfg.input_len - 1; t >= 0; --t) out.push_back(frames[static_cast<std::size_t>(t)]);
  return out;
}

std::vector<Matrix> prediction_targets(std::span<const Matrix> frames, const NetworkConfig& cfg) {
  const auto need = static_cast<std::size_t>(cfg.input_len + cfg.output_len);
  if (frames.size() < need) {
    throw ShapeError("prediction targets need " + std::to_string(need) + " frames, got " +
                     std::to_string(frames.size()));
  }
  return {frames.begin() + cfg.input_len, frames.begin() + static_cast<std::ptrdiff_t>(need)};
}

}  // namespace spgru
