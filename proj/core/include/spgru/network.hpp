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

// The SP-GRU cell, its output layer and the encoder/decoder topologies, all
// operating on mean/variance pairs.
//
// Model code is written once against an "ops" backend: ValueOps evaluates
// eagerly on Eigen matrices (inference, benchmarks), TapeOps records onto an
// autodiff tape (training, gradient checks).

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spgru/autodiff.hpp"
#include "spgru/expfam.hpp"
#include "spgru/moments.hpp"

namespace spgru {

enum class Mode { Autoencoder, Predictor, Composite };
enum class CellVarianceRule { Corrected, Literal };
enum class GateProductRule { FullIndependent, Simplified };
enum class LossKind { BceMean, GaussianNll };

std::string_view to_string(Mode v);
std::string_view to_string(CellVarianceRule v);
std::string_view to_string(GateProductRule v);
std::string_view to_string(LossKind v);
std::string_view to_string(SigmoidOmega v);

// Parsers throw ConfigError on unknown names.
Mode parse_mode(std::string_view s);
CellVarianceRule parse_cell_variance_rule(std::string_view s);
GateProductRule parse_gate_product_rule(std::string_view s);
LossKind parse_loss_kind(std::string_view s);
SigmoidOmega parse_sigmoid_omega(std::string_view s);

struct NetworkConfig {
  Mode mode = Mode::Predictor;
  int input_len = 10;
  int output_len = 10;
  Eigen::Index hidden = 128;
  Eigen::Index input = 32 * 32;
  CellVarianceRule cell_variance_rule = CellVarianceRule::Corrected;
  GateProductRule gate_product_rule = GateProductRule::FullIndependent;
  LossKind loss = LossKind::BceMean;
  SigmoidOmega sigmoid_omega = SigmoidOmega::Main;

  void validate() const;
  bool has_reconstruction() const { return mode != Mode::Predictor; }
  bool has_prediction() const { return mode != Mode::Autoencoder; }
  NmmConstants constants() const { return NmmConstants::with_omega(sigmoid_omega); }

  /// Stable textual form; its hash goes into checkpoint headers.
  std::string canonical() const;
  std::uint64_t hash() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Variance parameters are stored unconstrained: s = log(1 + exp(rho)).
double softplus(double rho);
double softplus_inverse(double s);

/// Weights of one gate. u_* map the input (hidden x input, possibly with
/// zero columns), w_* the recurrent state (hidden x hidden), b_* are
/// hidden x 1.
struct GateParams {
  Matrix u_mean, u_rho;
  Matrix w_mean, w_rho;
  Matrix b_mean, b_rho;
};

struct CellParams {
  Eigen::Index hidden = 0;
  Eigen::Index input = 0;
  GateParams reset, update, candidate;

  template <class Self, class F>
  static void visit_impl(Self& self, const std::string& prefix, F&& f) {
    auto gate = [&](auto& g, const char* name) {
      const std::string p = prefix + "." + name;
      f(p + ".u_mean", g.u_mean);
      f(p + ".u_rho", g.u_rho);
      f(p + ".w_mean", g.w_mean);
      f(p + ".w_rho", g.w_rho);
      f(p + ".b_mean", g.b_mean);
      f(p + ".b_rho", g.b_rho);
    };
    gate(self.reset, "reset");
    gate(self.update, "update");
    gate(self.candidate, "candidate");
  }
  template <class F> void visit(const std::string& prefix, F&& f) { visit_impl(*this, prefix, f); }
  template <class F> void visit(const std::string& prefix, F&& f) const { visit_impl(*this, prefix, f); }
};

struct OutputLayerParams {
  Matrix v_mean, v_rho;  // out x hidden
  Matrix c_mean, c_rho;  // out x 1

  template <class Self, class F>
  static void visit_impl(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".v_mean", self.v_mean);
    f(prefix + ".v_rho", self.v_rho);
    f(prefix + ".c_mean", self.c_mean);
    f(prefix + ".c_rho", self.c_rho);
  }
  template <class F> void visit(const std::string& prefix, F&& f) { visit_impl(*this, prefix, f); }
  template <class F> void visit(const std::string& prefix, F&& f) const { visit_impl(*this, prefix, f); }
};

/// A decoder: an input-free cell started from the encoder state, plus the
/// layer that maps its state to pixel moments.
struct HeadParams {
  CellParams cell;
  OutputLayerParams output;
};

struct NetworkParams {
  CellParams encoder;
  std::optional<HeadParams> reconstruct;
  std::optional<HeadParams> predict;

  /// Calls f(name, matrix) for every array in a fixed order.
  template <class F> void visit(F&& f) { visit_impl(*this, f); }
  template <class F> void visit(F&& f) const { visit_impl(*this, f); }

  std::size_t scalar_count() const;

 private:
  template <class Self, class F>
  static void visit_impl(Self& self, F&& f) {
    self.encoder.visit("encoder", f);
    if (self.reconstruct) {
      self.reconstruct->cell.visit("reconstruct.cell", f);
      self.reconstruct->output.visit("reconstruct.output", f);
    }
    if (self.predict) {
      self.predict->cell.visit("predict.cell", f);
      self.predict->output.visit("predict.output", f);
    }
  }
};

/// Uniform(-k, k) means with k = 1/sqrt(fan_in), zero bias means, and every
/// variance parameter set so that the variance equals init_s.
CellParams init_cell(std::uint64_t seed, Eigen::Index hidden, Eigen::Index input, double init_s);
OutputLayerParams init_output(std::uint64_t seed, Eigen::Index out, Eigen::Index hidden, double init_s);
NetworkParams init_params(const NetworkConfig& cfg, std::uint64_t seed, double init_s = 1e-3);

/// Checks every array against the config's dimensions.
void check_shapes(const NetworkParams& p, const NetworkConfig& cfg);

// ---------------------------------------------------------------------------
// Backends

struct ValueOps {
  using Tensor = Matrix;

  NmmConstants constants{};
  NmmStats stats{};

  Tensor param(const Matrix& m) { return m; }
  Tensor constant(const Matrix& m) { return m; }
  Tensor zeros(Eigen::Index r, Eigen::Index c) { return Matrix::Zero(r, c); }
  Tensor matmul(const Tensor& a, const Tensor& b) { return a * b; }
  Tensor add(const Tensor& a, const Tensor& b) { return a + b; }
  Tensor sub(const Tensor& a, const Tensor& b) { return a - b; }
  Tensor mul(const Tensor& a, const Tensor& b) { return a.cwiseProduct(b); }
  Tensor square(const Tensor& a) { return a.cwiseProduct(a); }
  Tensor scale(const Tensor& a, double c) { return a * c; }
  Tensor add_scalar(const Tensor& a, double c) { return (a.array() + c).matrix(); }
  Tensor softplus(const Tensor& a);
  Tensor clamp_min(const Tensor& a, double floor) { return a.cwiseMax(floor); }
  Tensor sigmoid_mean(const Tensor& m, const Tensor& s);
  Tensor sigmoid_var(const Tensor& m, const Tensor& s);
  Tensor tanh_mean(const Tensor& m, const Tensor& s);
  Tensor tanh_var(const Tensor& m, const Tensor& s);
};

struct TapeOps {
  using Tensor = ad::Var;

  explicit TapeOps(ad::Tape& t) : tape(t) {}

  ad::Tape& tape;
  /// Leaf created for each parameter matrix, keyed by its address.
  std::unordered_map<const Matrix*, ad::Var> bindings;

  Tensor param(const Matrix& m);
  Tensor constant(const Matrix& m) { return tape.constant(m); }
  Tensor zeros(Eigen::Index r, Eigen::Index c) { return tape.constant(Matrix::Zero(r, c)); }
  Tensor matmul(Tensor a, Tensor b) { return tape.record(ad::Op::MatMul, {a, b}); }
  Tensor add(Tensor a, Tensor b) { return tape.record(ad::Op::Add, {a, b}); }
  Tensor sub(Tensor a, Tensor b) { return tape.record(ad::Op::Sub, {a, b}); }
  Tensor mul(Tensor a, Tensor b) { return tape.record(ad::Op::Mul, {a, b}); }
  Tensor square(Tensor a) { return tape.record(ad::Op::Square, {a}); }
  Tensor scale(Tensor a, double c) { return tape.record(ad::Op::Scale, {a}, c); }
  Tensor add_scalar(Tensor a, double c) { return tape.record(ad::Op::AddScalar, {a}, c); }
  Tensor softplus(Tensor a) { return tape.record(ad::Op::Softplus, {a}); }
  Tensor clamp_min(Tensor a, double floor) { return tape.record(ad::Op::ClampMin, {a}, floor); }
  Tensor sigmoid_mean(Tensor m, Tensor s) { return tape.record(ad::Op::SigmoidMean, {m, s}); }
  Tensor sigmoid_var(Tensor m, Tensor s) { return tape.record(ad::Op::SigmoidVar, {m, s}); }
  Tensor tanh_mean(Tensor m, Tensor s) { return tape.record(ad::Op::TanhMean, {m, s}); }
  Tensor tanh_var(Tensor m, Tensor s) { return tape.record(ad::Op::TanhVar, {m, s}); }
};

// ---------------------------------------------------------------------------
// Backend-generic model

template <class T>
struct Moments {
  T m;
  T s;
};

/// Cell input; s is absent for observed (deterministic) frames.
template <class T>
struct CellInput {
  T m;
  std::optional<T> s;
};

/// Gate weights in moment form, with the weight-variance sums precomputed.
template <class T>
struct PreparedGate {
  T u_m, u_s;
  std::optional<T> u_total;  // u_s + u_m^2, only when inputs carry variance
  T w_m, w_s, w_total;
  T b_m, b_s;
};

template <class T>
struct PreparedCell {
  Eigen::Index hidden = 0;
  Eigen::Index input = 0;
  PreparedGate<T> reset, update, candidate;
};

template <class T>
struct PreparedOutput {
  T v_m, v_s, v_total;
  T c_m, c_s;
};

template <class T>
struct PreparedHead {
  PreparedCell<T> cell;
  PreparedOutput<T> output;
};

template <class T>
struct PreparedNetwork {
  PreparedCell<T> encoder;
  std::optional<PreparedHead<T>> reconstruct;
  std::optional<PreparedHead<T>> predict;
};

struct CellRules {
  CellVarianceRule variance = CellVarianceRule::Corrected;
  GateProductRule product = GateProductRule::FullIndependent;
};

template <class T>
struct Unrolled {
  std::vector<Moments<T>> reconstruction;  // targets: inputs in reverse order
  std::vector<Moments<T>> prediction;      // targets: the frames that follow
};

template <class Ops>
PreparedCell<typename Ops::Tensor> prepare_cell(Ops& ops, const CellParams& p, bool input_variance);

template <class Ops>
PreparedOutput<typename Ops::Tensor> prepare_output(Ops& ops, const OutputLayerParams& p);

template <class Ops>
PreparedNetwork<typename Ops::Tensor> prepare_network(Ops& ops, const NetworkParams& p);

template <class Ops>
Moments<typename Ops::Tensor> cell_step(Ops& ops, const PreparedCell<typename Ops::Tensor>& cell,
                                        const CellInput<typename Ops::Tensor>* x,
                                        const Moments<typename Ops::Tensor>& prev,
                                        const CellRules& rules);

/// Combines candidate and previous state through the update gate.
template <class Ops>
Moments<typename Ops::Tensor> combine_state(Ops& ops, const Moments<typename Ops::Tensor>& z,
                                            const Moments<typename Ops::Tensor>& candidate,
                                            const Moments<typename Ops::Tensor>& prev,
                                            const CellRules& rules);

template <class Ops>
Moments<typename Ops::Tensor> output_layer(Ops& ops, const PreparedOutput<typename Ops::Tensor>& out,
                                           const Moments<typename Ops::Tensor>& h);

/// Encodes cfg.input_len frames, then runs the heads enabled by cfg.mode.
template <class Ops>
Unrolled<typename Ops::Tensor> unroll(Ops& ops, const PreparedNetwork<typename Ops::Tensor>& net,
                                      const NetworkConfig& cfg, std::span<const Matrix> frames);

// ---------------------------------------------------------------------------
// Value-level convenience API

struct CellState {
  Matrix h_m;
  Matrix h_s;
};

CellState cell_step(const MomentTensor& x, const CellState& prev, const CellParams& p,
                    const CellRules& rules = {}, const NmmConstants& k = {});

struct UnrollResult {
  std::vector<MomentTensor> reconstruction;
  std::vector<MomentTensor> prediction;
  std::size_t clamped = 0;
};

/// frames: flattened D x 1 images; the first cfg.input_len are the input.
UnrollResult unroll(std::span<const Matrix> frames, const NetworkConfig& cfg, const NetworkParams& p);

/// Reconstruction targets (inputs reversed) and prediction targets.
std::vector<Matrix> reconstruction_targets(std::span<const Matrix> frames, const NetworkConfig& cfg);
std::vector<Matrix> prediction_targets(std::span<const Matrix> frames, const NetworkConfig& cfg);

}  // namespace spgru
