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

// Linear and nonlinear moment matching.
//
// Linear moment matching propagates mean and variance exactly through an
// affine map whose weights and biases are independent random variables.
// Nonlinear moment matching maps the moments of a pre-activation through an
// activation: sigmoid/tanh under a Gaussian use the probit approximation
// sigma(x) ~ Phi(zeta x); the saturating exponential activation
// f(x) = c (1 - exp(-gamma x)) under Gamma or Poisson inputs is exact.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "spgru/expfam.hpp"

namespace spgru {

/// Which offset constant the sigmoid variance term uses.
/// Main is -log(sqrt2 + 1); Halved is half of that.
enum class SigmoidOmega { Main, Halved };

struct NmmConstants {
  double zeta = std::sqrt(std::numbers::pi / 8.0);
  double nu_sig = 4.0 - 2.0 * std::numbers::sqrt2;
  double omega_sig = -std::log(std::numbers::sqrt2 + 1.0);
  double nu_tanh = 2.0 * (4.0 - 2.0 * std::numbers::sqrt2);
  double omega_tanh = -std::log(std::numbers::sqrt2 + 1.0) / 2.0;
  // Scale and rate of f(x) = c (1 - exp(-gamma x)) for Gamma/Poisson inputs.
  double c = 1.0;
  double gamma = 1.0;

  static NmmConstants with_omega(SigmoidOmega variant);
  void validate() const;
};

struct LinearLayerParams {
  Matrix w_m;  // out x in
  Matrix w_s;  // out x in, >= 0
  Matrix b_m;  // out x 1
  Matrix b_s;  // out x 1, >= 0

  void validate() const;
};

/// Running diagnostics for the variance clamp.
struct NmmStats {
  std::size_t clamped = 0;
};

/// One elementwise kernel evaluation and its partial derivatives.
struct KernelValue {
  double value = 0.0;
  double d_m = 0.0;
  double d_s = 0.0;
  bool clamped = false;     // the raw variance was negative and was set to 0
  bool point_mass = false;  // s == 0: the output variance is exactly 0
};

// Scalar kernels. At s == 0 the input is a point mass, so the variance
// kernels return exactly 0 there; their d_s is the one-sided slope of the
// closed form from the interior.
KernelValue sigmoid_mean(double m, double s, const NmmConstants& k);
KernelValue sigmoid_var(double m, double s, const NmmConstants& k);
KernelValue tanh_mean(double m, double s, const NmmConstants& k);
KernelValue tanh_var(double m, double s, const NmmConstants& k);

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MomentTensor lmm(const MomentTensor& a, const LinearLayerParams& p);

MomentTensor nmm_sigmoid_gauss(const MomentTensor& o, const NmmConstants& k = {},
                               NmmStats* stats = nullptr);
MomentTensor nmm_tanh_gauss(const MomentTensor& o, const NmmConstants& k = {},
                            NmmStats* stats = nullptr);

/// Gamma pre-activation in natural form; converted to shape/rate internally.
MomentTensor nmm_gamma(const NaturalParams& o, const NmmConstants& k = {});
MomentTensor nmm_gamma_shape_rate(const Matrix& shape, const Matrix& rate,
                                  const NmmConstants& k = {});

/// Poisson pre-activation; the rate is stored in alpha.
MomentTensor nmm_poisson(const NaturalParams& o, const NmmConstants& k = {});

}  // namespace spgru
