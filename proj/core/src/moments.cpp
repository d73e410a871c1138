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

#include "spgru/moments.hpp"

#include <algorithm>

#include "spgru/error.hpp"

namespace spgru {

NmmConstants NmmConstants::with_omega(SigmoidOmega variant) {
  NmmConstants k;
  if (variant == SigmoidOmega::Halved) k.omega_sig = -std::log(std::numbers::sqrt2 + 1.0) / 2.0;
  return k;
}

void NmmConstants::validate() const {
  if (!(c > 0.0)) throw DomainError("activation scale c must be > 0", 0, c);
  if (!(gamma > 0.0)) throw DomainError("activation rate gamma must be > 0", 0, gamma);
}

void LinearLayerParams::validate() const {
  if (w_m.rows() != w_s.rows() || w_m.cols() != w_s.cols()) {
    throw ShapeError("LinearLayerParams: W mean/variance shapes differ");
  }
  if (b_m.rows() != w_m.rows() || b_s.rows() != w_m.rows() || b_m.cols() != 1 ||
      b_s.cols() != 1) {
    throw ShapeError("LinearLayerParams: bias must be out x 1");
  }
  for (Eigen::Index i = 0; i < w_s.size(); ++i) {
    if (!(w_s(i) >= 0.0)) throw DomainError("weight variance must be >= 0", i, w_s(i));
  }
  for (Eigen::Index i = 0; i < b_s.size(); ++i) {
    if (!(b_s(i) >= 0.0)) throw DomainError("bias variance must be >= 0", i, b_s(i));
  }
}

namespace {

inline double dlogistic(double y) { return y * (1.0 - y); }

}  // namespace

KernelValue sigmoid_mean(double m, double s, const NmmConstants& k) {
  const double z2 = k.zeta * k.zeta;
  const double scale = 1.0 / std::sqrt(1.0 + z2 * s);
  const double y = logistic(m * scale);
  const double dy = dlogistic(y);
  return {y, dy * scale, dy * m * (-0.5 * z2 * scale * scale * scale), false, false};
}

KernelValue sigmoid_var(double m, double s, const NmmConstants& k) {
  const KernelValue mean = sigmoid_mean(m, s, k);
  const double z2 = k.zeta * k.zeta;
  const double nu = k.nu_sig;
  const double q = 1.0 / std::sqrt(1.0 + z2 * nu * nu * s);
  const double shifted = m + k.omega_sig;
  const double y = logistic(nu * shifted * q);
  const double dy = dlogistic(y);
  const double raw = y - mean.value * mean.value;
  const double raw_ds =
      dy * nu * shifted * (-0.5 * z2 * nu * nu * q * q * q) - 2.0 * mean.value * mean.d_s;
  if (s == 0.0) return {0.0, 0.0, raw > 0.0 ? raw_ds : 0.0, false, true};
  if (raw < 0.0) return {0.0, 0.0, 0.0, true, false};
  return {raw, dy * nu * q - 2.0 * mean.value * mean.d_m, raw_ds, false, false};
}

KernelValue tanh_mean(double m, double s, const NmmConstants& k) {
  const double z2 = k.zeta * k.zeta;
  const double scale = 1.0 / std::sqrt(0.25 + z2 * s);
  const double y = logistic(m * scale);
  const double dy = dlogistic(y);
  return {2.0 * y - 1.0, 2.0 * dy * scale, 2.0 * dy * m * (-0.5 * z2 * scale * scale * scale),
          false, false};
}

KernelValue tanh_var(double m, double s, const NmmConstants& k) {
  const KernelValue mean = tanh_mean(m, s, k);
  const double z2 = k.zeta * k.zeta;
  const double nu = k.nu_tanh;
  const double q = 1.0 / std::sqrt(1.0 + z2 * nu * nu * s);
  const double shifted = m + k.omega_tanh;
  const double y = logistic(nu * shifted * q);
  const double dy = dlogistic(y);
  const double a = mean.value;
  const double raw = 4.0 * y - a * a - 2.0 * a - 1.0;
  const double outer = -(2.0 * a + 2.0);
  const double raw_ds = 4.0 * dy * nu * shifted * (-0.5 * z2 * nu * nu * q * q * q) + outer * mean.d_s;
  if (s == 0.0) return {0.0, 0.0, raw > 0.0 ? raw_ds : 0.0, false, true};
  if (raw < 0.0) return {0.0, 0.0, 0.0, true, false};
  return {raw, 4.0 * dy * nu * q + outer * mean.d_m, raw_ds, false, false};
}

MomentTensor lmm(const MomentTensor& a, const LinearLayerParams& p) {
  p.validate();
  if (a.m.rows() != p.w_m.cols()) {
    throw ShapeError("lmm: input has " + std::to_string(a.m.rows()) + " rows, weights expect " +
                     std::to_string(p.w_m.cols()));
  }
  validate(a);
  Matrix om = p.w_m * a.m;
  om.colwise() += p.b_m.col(0);
  const Matrix w_total = p.w_s + p.w_m.cwiseProduct(p.w_m);
  Matrix os = w_total * a.s + p.w_s * a.m.cwiseProduct(a.m);
  os.colwise() += p.b_s.col(0);
  return {std::move(om), std::move(os)};
}

namespace {

template <class MeanFn, class VarFn>
MomentTensor map_gauss(const MomentTensor& o, const NmmConstants& k, NmmStats* stats,
                       MeanFn mean_fn, VarFn var_fn) {
  validate(o);
  MomentTensor out{Matrix(o.rows(), o.cols()), Matrix(o.rows(), o.cols())};
  for (Eigen::Index i = 0; i < o.m.size(); ++i) {
    out.m(i) = mean_fn(o.m(i), o.s(i), k).value;
    const KernelValue v = var_fn(o.m(i), o.s(i), k);
    out.s(i) = v.value;
    if (v.clamped && stats) ++stats->clamped;
  }
  return out;
}

}  // namespace

MomentTensor nmm_sigmoid_gauss(const MomentTensor& o, const NmmConstants& k, NmmStats* stats) {
  return map_gauss(o, k, stats, sigmoid_mean, sigmoid_var);
}

MomentTensor nmm_tanh_gauss(const MomentTensor& o, const NmmConstants& k, NmmStats* stats) {
  return map_gauss(o, k, stats, tanh_mean, tanh_var);
}

MomentTensor nmm_gamma_shape_rate(const Matrix& shape, const Matrix& rate, const NmmConstants& k) {
  k.validate();
  if (shape.rows() != rate.rows() || shape.cols() != rate.cols()) {
    throw ShapeError("nmm_gamma: shape/rate mismatch");
  }
  MomentTensor out{Matrix(shape.rows(), shape.cols()), Matrix(shape.rows(), shape.cols())};
  for (Eigen::Index i = 0; i < shape.size(); ++i) {
    const double a = shape(i);
    const double b = rate(i);
    if (!(a > 0.0)) throw DomainError("gamma shape must be > 0", i, a);
    if (!(b > 0.0)) throw DomainError("gamma rate must be > 0", i, b);
    // (b / (b + t))^a = exp(-a log1p(t / b)). The variance p2 - p1^2 is
    // rewritten as p1^2 expm1(-a log1p(-(x / (1 + x))^2)), x = gamma / b,
    // which avoids cancellation when X is concentrated.
    const double x = k.gamma / b;
    const double l1 = std::log1p(x);
    const double p1 = std::exp(-a * l1);
    const double r = x / (1.0 + x);
    out.m(i) = -k.c * std::expm1(-a * l1);
    out.s(i) = std::max(k.c * k.c * p1 * p1 * std::expm1(-a * std::log1p(-r * r)), 0.0);
  }
  return out;
}

MomentTensor nmm_gamma(const NaturalParams& o, const NmmConstants& k) {
  const GammaShapeRate sr = to_shape_rate(o);
  return nmm_gamma_shape_rate(sr.shape, sr.rate, k);
}

MomentTensor nmm_poisson(const NaturalParams& o, const NmmConstants& k) {
  k.validate();
  if (o.family != Family::Poisson) throw DomainError("nmm_poisson needs a poisson family", 0, 0.0);
  MomentTensor out{Matrix(o.rows(), o.cols()), Matrix(o.rows(), o.cols())};
  // Mean c (1 - exp(e1 lambda)); variance c^2 exp(2 e1 lambda) expm1(e1^2 lambda),
  // with e1 = exp(-gamma) - 1.
  const double e1 = std::expm1(-k.gamma);
  for (Eigen::Index i = 0; i < o.alpha.size(); ++i) {
    const double lambda = o.alpha(i);
    if (!(lambda > 0.0)) throw DomainError("poisson rate must be > 0", i, lambda);
    out.m(i) = -k.c * std::expm1(e1 * lambda);
    out.s(i) = std::max(k.c * k.c * std::exp(2.0 * e1 * lambda) * std::expm1(e1 * e1 * lambda), 0.0);
  }
  return out;
}

}  // namespace spgru
