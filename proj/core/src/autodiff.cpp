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

#include "spgru/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "spgru/error.hpp"

namespace spgru::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softplus: return "softplus";
    case Op::ClampMin: return "clamp_min";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SigmoidMean: return "sigmoid_mean";
    case Op::SigmoidVar: return "sigmoid_var";
    case Op::TanhMean: return "tanh_mean";
    case Op::TanhVar: return "tanh_var";
    case Op::BceSum: return "bce_sum";
    case Op::GaussNllSum: return "gauss_nll_sum";
  }
  return "unknown";
}

const Matrix& Var::value() const { return tape->value(*this); }

Matrix Gradients::of(Var v) const {
  const Matrix& g = grads_.at(static_cast<std::size_t>(v.id));
  if (g.size() > 0) return g;
  return Matrix::Zero(v.rows(), v.cols());
}

Tape::Tape(TapeOptions options) : options_(options) { nodes_.reserve(256); }

Var Tape::leaf(Matrix value, bool requires_grad) {
  if (options_.check_finite && !value.allFinite()) {
    throw NonFiniteError("non-finite leaf value");
  }
  Node n;
  n.op = Op::Leaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

namespace {

int arity_of(Op op) {
  switch (op) {
    case Op::Leaf:
      return 0;
    case Op::MatMul:
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::SigmoidMean:
    case Op::SigmoidVar:
    case Op::TanhMean:
    case Op::TanhVar:
    case Op::BceSum:
      return 2;
    case Op::GaussNllSum:
      return 3;
    default:
      return 1;
  }
}

void require_same(const Matrix& a, const Matrix& b, Op op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op_name(op)) + ": shape mismatch " + std::to_string(a.rows()) +
                     "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

double softplus_scalar(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double bce_term(double p, double t) {
  const double q = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
  return -(t * std::log(q) + (1.0 - t) * std::log1p(-q));
}

}  // namespace

void Tape::check_same_tape(std::span<const Var> inputs) const {
  for (const Var& v : inputs) {
    if (v.tape != this) throw ShapeError("input registered on a different tape");
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw ShapeError("input refers to a node that does not exist");
    }
  }
}

Matrix Tape::forward(Op op, std::span<const Var> in, double scalar) {
  auto val = [&](int i) -> const Matrix& { return nodes_[static_cast<std::size_t>(in[i].id)].value; };
  const NmmConstants& k = options_.constants;
  switch (op) {
    case Op::Leaf:
      throw ShapeError("leaf nodes are created with Tape::leaf");
    case Op::MatMul:
      if (val(0).cols() != val(1).rows()) {
        throw ShapeError("matmul: inner dimensions " + std::to_string(val(0).cols()) + " and " +
                         std::to_string(val(1).rows()) + " differ");
      }
      return val(0) * val(1);
    case Op::Add:
      require_same(val(0), val(1), op);
      return val(0) + val(1);
    case Op::Sub:
      require_same(val(0), val(1), op);
      return val(0) - val(1);
    case Op::Mul:
      require_same(val(0), val(1), op);
      return val(0).cwiseProduct(val(1));
    case Op::Scale:
      return val(0) * scalar;
    case Op::AddScalar:
      return (val(0).array() + scalar).matrix();
    case Op::Square:
      return val(0).cwiseProduct(val(0));
    case Op::Sqrt:
      return val(0).cwiseSqrt();
    case Op::Exp:
      return val(0).array().exp().matrix();
    case Op::Log:
      return val(0).array().log().matrix();
    case Op::Sigmoid:
      return val(0).unaryExpr([](double x) { return logistic(x); });
    case Op::Softplus:
      return val(0).unaryExpr([](double x) { return softplus_scalar(x); });
    case Op::ClampMin: {
      const Matrix& x = val(0);
      for (Eigen::Index i = 0; i < x.size(); ++i) kinks_.push_back(x(i) > scalar ? 1 : 0);
      return x.cwiseMax(scalar);
    }
    case Op::Sum:
      return Matrix::Constant(1, 1, val(0).sum());
    case Op::Mean:
      if (val(0).size() == 0) throw ShapeError("mean of an empty array");
      return Matrix::Constant(1, 1, val(0).mean());
    case Op::SigmoidMean:
    case Op::SigmoidVar:
    case Op::TanhMean:
    case Op::TanhVar: {
      require_same(val(0), val(1), op);
      const Matrix& m = val(0);
      const Matrix& s = val(1);
      Matrix out(m.rows(), m.cols());
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        KernelValue kv;
        switch (op) {
          case Op::SigmoidMean: kv = sigmoid_mean(m(i), s(i), k); break;
          case Op::SigmoidVar: kv = sigmoid_var(m(i), s(i), k); break;
          case Op::TanhMean: kv = tanh_mean(m(i), s(i), k); break;
          default: kv = tanh_var(m(i), s(i), k); break;
        }
        if (op == Op::SigmoidVar || op == Op::TanhVar) {
          kinks_.push_back(static_cast<std::uint8_t>((kv.clamped ? 1 : 0) | (kv.point_mass ? 2 : 0)));
          if (kv.clamped) ++clamp_count_;
        }
        out(i) = kv.value;
      }
      return out;
    }
    case Op::BceSum: {
      require_same(val(0), val(1), op);
      double total = 0.0;
      for (Eigen::Index i = 0; i < val(0).size(); ++i) total += bce_term(val(0)(i), val(1)(i));
      return Matrix::Constant(1, 1, total);
    }
    case Op::GaussNllSum: {
      require_same(val(0), val(1), op);
      require_same(val(0), val(2), op);
      double total = 0.0;
      for (Eigen::Index i = 0; i < val(0).size(); ++i) {
        const double s = std::max(val(1)(i), kNllVarianceFloor);
        const double d = val(2)(i) - val(0)(i);
        total += 0.5 * (std::log(2.0 * std::numbers::pi * s) + d * d / s);
      }
      return Matrix::Constant(1, 1, total);
    }
  }
  throw ShapeError("unknown op");
}

Var Tape::record(Op op, std::span<const Var> inputs, double scalar) {
  const int arity = arity_of(op);
  if (static_cast<int>(inputs.size()) != arity) {
    throw ShapeError(std::string(op_name(op)) + ": expected " + std::to_string(arity) + " inputs");
  }
  check_same_tape(inputs);
  Node n;
  n.op = op;
  n.arity = arity;
  n.scalar = scalar;
  for (int i = 0; i < arity; ++i) {
    n.inputs[static_cast<std::size_t>(i)] = inputs[static_cast<std::size_t>(i)].id;
    n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(inputs[i].id)].requires_grad;
  }
  n.value = forward(op, inputs, scalar);
  if (options_.check_finite && !n.value.allFinite()) {
    throw NonFiniteError(std::string("non-finite output from ") + op_name(op) + " at node " +
                         std::to_string(nodes_.size()));
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

namespace {

void accumulate(std::vector<Matrix>& grads, int id, const Matrix& g) {
  Matrix& dst = grads[static_cast<std::size_t>(id)];
  if (dst.size() == 0) {
    dst = g;
  } else {
    dst += g;
  }
}

}  // namespace

void Tape::backprop(const Node& node, const Matrix& g, std::vector<Matrix>& grads) const {
  auto in = [&](int i) -> const Node& { return nodes_[static_cast<std::size_t>(node.inputs[static_cast<std::size_t>(i)])]; };
  auto wants = [&](int i) { return in(i).requires_grad; };
  auto push = [&](int i, const Matrix& d) { accumulate(grads, node.inputs[static_cast<std::size_t>(i)], d); };
  const NmmConstants& k = options_.constants;

  switch (node.op) {
    case Op::Leaf:
      return;
    case Op::MatMul:
      if (wants(0)) push(0, g * in(1).value.transpose());
      if (wants(1)) push(1, in(0).value.transpose() * g);
      return;
    case Op::Add:
      if (wants(0)) push(0, g);
      if (wants(1)) push(1, g);
      return;
    case Op::Sub:
      if (wants(0)) push(0, g);
      if (wants(1)) push(1, -g);
      return;
    case Op::Mul:
      if (wants(0)) push(0, g.cwiseProduct(in(1).value));
      if (wants(1)) push(1, g.cwiseProduct(in(0).value));
      return;
    case Op::Scale:
      push(0, g * node.scalar);
      return;
    case Op::AddScalar:
      push(0, g);
      return;
    case Op::Square:
      push(0, 2.0 * g.cwiseProduct(in(0).value));
      return;
    case Op::Sqrt:
      push(0, (0.5 * g.array() / node.value.array()).matrix());
      return;
    case Op::Exp:
      push(0, g.cwiseProduct(node.value));
      return;
    case Op::Log:
      push(0, (g.array() / in(0).value.array()).matrix());
      return;
    case Op::Sigmoid:
      push(0, (g.array() * node.value.array() * (1.0 - node.value.array())).matrix());
      return;
    case Op::Softplus:
      push(0, (g.array() * in(0).value.unaryExpr([](double x) { return logistic(x); }).array()).matrix());
      return;
    case Op::ClampMin: {
      const Matrix& x = in(0).value;
      Matrix d(g.rows(), g.cols());
      for (Eigen::Index i = 0; i < x.size(); ++i) d(i) = x(i) > node.scalar ? g(i) : 0.0;
      push(0, d);
      return;
    }
    case Op::Sum:
      push(0, Matrix::Constant(in(0).value.rows(), in(0).value.cols(), g(0, 0)));
      return;
    case Op::Mean: {
      const Matrix& x = in(0).value;
      push(0, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size())));
      return;
    }
    case Op::SigmoidMean:
    case Op::SigmoidVar:
    case Op::TanhMean:
    case Op::TanhVar: {
      const Matrix& m = in(0).value;
      const Matrix& s = in(1).value;
      Matrix dm(m.rows(), m.cols());
      Matrix ds(m.rows(), m.cols());
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        KernelValue kv;
        switch (node.op) {
          case Op::SigmoidMean: kv = sigmoid_mean(m(i), s(i), k); break;
          case Op::SigmoidVar: kv = sigmoid_var(m(i), s(i), k); break;
          case Op::TanhMean: kv = tanh_mean(m(i), s(i), k); break;
          default: kv = tanh_var(m(i), s(i), k); break;
        }
        dm(i) = g(i) * kv.d_m;
        ds(i) = g(i) * kv.d_s;
      }
      if (wants(0)) push(0, dm);
      if (wants(1)) push(1, ds);
      return;
    }
    case Op::BceSum: {
      const Matrix& p = in(0).value;
      const Matrix& t = in(1).value;
      const double go = g(0, 0);
      if (wants(0)) {
        Matrix d(p.rows(), p.cols());
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          const bool inside = p(i) > kBceEpsilon && p(i) < 1.0 - kBceEpsilon;
          d(i) = inside ? go * (p(i) - t(i)) / (p(i) * (1.0 - p(i))) : 0.0;
        }
        push(0, d);
      }
      if (wants(1)) {
        Matrix d(p.rows(), p.cols());
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          const double q = std::clamp(p(i), kBceEpsilon, 1.0 - kBceEpsilon);
          d(i) = go * (std::log1p(-q) - std::log(q));
        }
        push(1, d);
      }
      return;
    }
    case Op::GaussNllSum: {
      const Matrix& m = in(0).value;
      const Matrix& s = in(1).value;
      const Matrix& t = in(2).value;
      const double go = g(0, 0);
      Matrix dm(m.rows(), m.cols());
      Matrix ds(m.rows(), m.cols());
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double sv = std::max(s(i), kNllVarianceFloor);
        const double d = m(i) - t(i);
        dm(i) = go * d / sv;
        ds(i) = s(i) > kNllVarianceFloor ? go * 0.5 * (1.0 / sv - d * d / (sv * sv)) : 0.0;
      }
      if (wants(0)) push(0, dm);
      if (wants(1)) push(1, ds);
      if (wants(2)) push(2, -dm);
      return;
    }
  }
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape != this) throw ShapeError("loss belongs to a different tape");
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw NonScalarLoss("backward needs a 1x1 loss, got " + std::to_string(lv.rows()) + "x" +
                        std::to_string(lv.cols()));
  }
  std::vector<char> reachable(nodes_.size(), 0);
  reachable[static_cast<std::size_t>(loss.id)] = 1;
  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!reachable[static_cast<std::size_t>(id)] || !n.requires_grad) continue;
    for (int i = 0; i < n.arity; ++i) reachable[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(i)])] = 1;
  }

  std::vector<Matrix> grads(nodes_.size());
  grads[static_cast<std::size_t>(loss.id)] = Matrix::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Matrix& g = grads[static_cast<std::size_t>(id)];
    if (!reachable[static_cast<std::size_t>(id)] || !n.requires_grad || g.size() == 0) continue;
    backprop(n, g, grads);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].requires_grad) grads[i].resize(0, 0);
  }
  return Gradients(std::move(grads));
}

Var matmul(Var a, Var b) { return a.tape->record(Op::MatMul, {a, b}); }
Var operator+(Var a, Var b) { return a.tape->record(Op::Add, {a, b}); }
Var operator-(Var a, Var b) { return a.tape->record(Op::Sub, {a, b}); }
Var operator*(Var a, Var b) { return a.tape->record(Op::Mul, {a, b}); }
Var operator*(Var a, double c) { return a.tape->record(Op::Scale, {a}, c); }
Var operator+(Var a, double c) { return a.tape->record(Op::AddScalar, {a}, c); }
Var square(Var a) { return a.tape->record(Op::Square, {a}); }
Var sqrt(Var a) { return a.tape->record(Op::Sqrt, {a}); }
Var exp(Var a) { return a.tape->record(Op::Exp, {a}); }
Var log(Var a) { return a.tape->record(Op::Log, {a}); }
Var sigmoid(Var a) { return a.tape->record(Op::Sigmoid, {a}); }
Var softplus(Var a) { return a.tape->record(Op::Softplus, {a}); }
Var clamp_min(Var a, double floor) { return a.tape->record(Op::ClampMin, {a}, floor); }
Var sum(Var a) { return a.tape->record(Op::Sum, {a}); }
Var mean(Var a) { return a.tape->record(Op::Mean, {a}); }

namespace {

struct Evaluation {
  double loss = 0.0;
  std::vector<std::uint8_t> kinks;
};

Evaluation evaluate(const TapeProgram& program, const std::vector<Matrix>& values,
                    const TapeOptions& tape_options) {
  Tape tape(tape_options);
  std::vector<Var> leaves;
  leaves.reserve(values.size());
  for (const Matrix& v : values) leaves.push_back(tape.leaf(v));
  const Var loss = program(tape, leaves);
  return {loss.value()(0, 0), tape.kink_signature()};
}

}  // namespace

GradCheckReport grad_check(const TapeProgram& program, const std::vector<CheckedParam>& params,
                           const GradCheckOptions& options, const TapeOptions& tape_options) {
  if (!(options.h > 0.0)) throw DomainError("grad_check step must be > 0", 0, options.h);

  std::vector<Matrix> values;
  for (const CheckedParam& p : params) values.push_back(p.value);

  Tape tape(tape_options);
  std::vector<Var> leaves;
  for (const Matrix& v : values) leaves.push_back(tape.leaf(v));
  const Var loss = program(tape, leaves);
  const Gradients grads = tape.backward(loss);
  const std::vector<std::uint8_t> base_kinks = tape.kink_signature();

  GradCheckReport report;
  const double h = options.h;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Matrix analytic = grads.of(leaves[p]);
    for (Eigen::Index i = 0; i < values[p].size(); ++i) {
      const double x0 = params[p].value(i);
      auto at = [&](double x) {
        std::vector<Matrix> shifted = values;
        shifted[p](i) = x;
        return evaluate(program, shifted, tape_options);
      };
      GradCheckEntry e;
      e.param = params[p].name;
      e.index = i;
      e.analytic = analytic(i);
      e.one_sided = x0 - options.kink_radius * h < params[p].lower_bound;

      std::vector<double> f;
      if (e.one_sided) {
        // Probes stay on the interior side. A boundary value that sits on a
        // different branch (point mass at s = 0) is not used; the slope is
        // then extrapolated from the interior probes.
        const double probes[] = {h, 2.0 * h, 3.0 * h, options.kink_radius * h};
        std::vector<std::uint8_t> side;
        for (double d : probes) {
          Evaluation ev = at(x0 + d);
          if (d == h) {
            side = ev.kinks;
          } else if (ev.kinks != side) {
            e.excluded = true;
          }
          f.push_back(ev.loss);
        }
        if (side == base_kinks) {
          const double f0 = evaluate(program, values, tape_options).loss;
          e.numeric = (-3.0 * f0 + 4.0 * f[0] - f[1]) / (2.0 * h);
        } else {
          e.numeric = (-2.5 * f[0] + 4.0 * f[1] - 1.5 * f[2]) / h;
        }
      } else {
        const double probes[] = {-h, h, -options.kink_radius * h, options.kink_radius * h};
        for (double d : probes) {
          Evaluation ev = at(x0 + d);
          if (ev.kinks != base_kinks) e.excluded = true;
          f.push_back(ev.loss);
        }
        e.numeric = (f[1] - f[0]) / (2.0 * h);
      }
      const double diff = std::abs(e.analytic - e.numeric);
      const double scale = std::max(std::abs(e.analytic), std::abs(e.numeric));
      e.rel_error = scale > 0.0 ? diff / scale : 0.0;
      e.pass = e.excluded || diff <= std::max(options.rel_tol * scale, options.abs_floor);
      if (e.excluded) {
        ++report.excluded;
      } else if (scale > options.abs_floor) {
        report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      }
      report.pass = report.pass && e.pass;
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

}  // namespace spgru::ad
