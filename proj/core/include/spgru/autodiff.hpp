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

// Reverse-mode differentiation over a linear tape of dense-matrix
// primitives. Each node stores its forward value; backward walks the tape in
// reverse and accumulates adjoints only for nodes reachable from the loss.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spgru/expfam.hpp"
#include "spgru/moments.hpp"

namespace spgru::ad {

enum class Op : std::uint8_t {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,        // elementwise
  Scale,      // x * scalar
  AddScalar,  // x + scalar
  Square,
  Sqrt,
  Exp,
  Log,
  Sigmoid,
  Softplus,
  ClampMin,  // max(x, scalar)
  Sum,
  Mean,
  SigmoidMean,  // (m, s) -> moment-matched sigmoid mean
  SigmoidVar,   // (m, s) -> moment-matched sigmoid variance
  TanhMean,
  TanhVar,
  BceSum,       // (p, target) -> sum of binary cross-entropy
  GaussNllSum,  // (m, s, target) -> sum of Gaussian negative log-likelihood
};

const char* op_name(Op op);

/// Probabilities are kept inside [eps, 1 - eps] by the BCE kernel.
inline constexpr double kBceEpsilon = 1e-12;
/// Variance floor of the Gaussian NLL kernel.
inline constexpr double kNllVarianceFloor = 1e-6;

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return tape != nullptr && id >= 0; }
};

struct TapeOptions {
  bool check_finite = false;
  NmmConstants constants{};
};

class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<Matrix> grads) : grads_(std::move(grads)) {}

  bool reached(Var v) const { return grads_.at(static_cast<std::size_t>(v.id)).size() > 0; }
  /// Adjoint of v; zeros if v was not reachable from the loss.
  Matrix of(Var v) const;

 private:
  std::vector<Matrix> grads_;
};

class Tape {
 public:
  explicit Tape(TapeOptions options = {});

  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  /// Evaluates a primitive and appends it. `scalar` parameterizes Scale,
  /// AddScalar and ClampMin.
  Var record(Op op, std::span<const Var> inputs, double scalar = 0.0);
  Var record(Op op, std::initializer_list<Var> inputs, double scalar = 0.0) {
    return record(op, std::span<const Var>(inputs.begin(), inputs.size()), scalar);
  }

  Gradients backward(Var loss) const;

  const Matrix& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
  std::size_t size() const { return nodes_.size(); }
  const TapeOptions& options() const { return options_; }

  /// Variance outputs clamped to zero so far.
  std::size_t clamp_count() const { return clamp_count_; }

  /// One entry per clamp decision taken during the forward pass
  /// (ClampMin activity and NMM variance clamp / point-mass branches).
  /// Two evaluations on the same side of every kink share a signature.
  const std::vector<std::uint8_t>& kink_signature() const { return kinks_; }

 private:
  struct Node {
    Op op = Op::Leaf;
    std::array<int, 3> inputs{-1, -1, -1};
    int arity = 0;
    double scalar = 0.0;
    bool requires_grad = false;
    Matrix value;
  };

  void check_same_tape(std::span<const Var> inputs) const;
  Matrix forward(Op op, std::span<const Var> in, double scalar);
  void backprop(const Node& node, const Matrix& g, std::vector<Matrix>& grads) const;

  TapeOptions options_;
  std::vector<Node> nodes_;
  std::size_t clamp_count_ = 0;
  std::vector<std::uint8_t> kinks_;
};

// Convenience wrappers.
Var matmul(Var a, Var b);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise
Var operator*(Var a, double c);
Var operator+(Var a, double c);
Var square(Var a);
Var sqrt(Var a);
Var exp(Var a);
Var log(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var clamp_min(Var a, double floor);
Var sum(Var a);
Var mean(Var a);

struct GradCheckOptions {
  double h = 1e-5;
  double rel_tol = 1e-4;
  double abs_floor = 1e-6;
  /// Points whose kink signature changes within kink_radius * h are excluded.
  double kink_radius = 10.0;
};

/// A parameter under test. Elements within kink_radius * h of lower_bound are
/// differenced one-sided (second order) toward the interior.
struct CheckedParam {
  std::string name;
  Matrix value;
  double lower_bound = -std::numeric_limits<double>::infinity();
};

struct GradCheckEntry {
  std::string param;
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  bool one_sided = false;
  bool excluded = false;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  /// Over checked entries whose gradient magnitude exceeds abs_floor.
  double max_rel_error = 0.0;
  std::size_t excluded = 0;
  bool pass = true;
};

/// Builds a scalar loss from leaves bound to the given parameter values.
using TapeProgram = std::function<Var(Tape&, std::span<const Var>)>;

GradCheckReport grad_check(const TapeProgram& program, const std::vector<CheckedParam>& params,
                           const GradCheckOptions& options = {}, const TapeOptions& tape_options = {});

}  // namespace spgru::ad
