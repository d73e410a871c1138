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

#include "spgru/expfam.hpp"

#include <algorithm>
#include <cmath>

#include "random_util.hpp"
#include "spgru/error.hpp"

namespace spgru {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Gaussian:
      return "gaussian";
    case Family::Gamma:
      return "gamma";
    case Family::Poisson:
      return "poisson";
  }
  return "unknown";
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace

void validate(const NaturalParams& p) {
  if (p.family != Family::Poisson) {
    require_same_shape(p.alpha, p.beta, "NaturalParams");
  }
  for (Eigen::Index i = 0; i < p.alpha.size(); ++i) {
    const double a = p.alpha(i);
    switch (p.family) {
      case Family::Gaussian: {
        const double b = p.beta(i);
        if (!std::isfinite(a)) throw DomainError("gaussian alpha not finite", i, a);
        if (!(b < 0.0)) throw DomainError("gaussian requires beta < 0", i, b);
        break;
      }
      case Family::Gamma: {
        const double b = p.beta(i);
        if (!(a > -1.0)) throw DomainError("gamma requires alpha > -1", i, a);
        if (!(b < 0.0)) throw DomainError("gamma requires beta < 0", i, b);
        break;
      }
      case Family::Poisson:
        if (!(a > 0.0)) throw DomainError("poisson requires lambda > 0", i, a);
        break;
    }
  }
}

void validate(const MomentTensor& t) {
  require_same_shape(t.m, t.s, "MomentTensor");
  for (Eigen::Index i = 0; i < t.s.size(); ++i) {
    if (!(t.s(i) >= 0.0)) throw DomainError("variance must be >= 0", i, t.s(i));
  }
}

MomentTensor to_moments(const NaturalParams& p) {
  validate(p);
  MomentTensor out{Matrix(p.rows(), p.cols()), Matrix(p.rows(), p.cols())};
  for (Eigen::Index i = 0; i < p.alpha.size(); ++i) {
    const double a = p.alpha(i);
    switch (p.family) {
      case Family::Gaussian: {
        const double b = p.beta(i);
        out.m(i) = -a / b;
        out.s(i) = std::max(-1.0 / b, kVarianceFloor);
        break;
      }
      case Family::Gamma: {
        const double b = p.beta(i);
        out.m(i) = -(a + 1.0) / b;
        out.s(i) = std::max((a + 1.0) / (b * b), kVarianceFloor);
        break;
      }
      case Family::Poisson:
        out.m(i) = a;
        out.s(i) = a;
        break;
    }
  }
  return out;
}

NaturalParams from_moments(const MomentTensor& t, Family family) {
  if (family != Family::Poisson) require_same_shape(t.m, t.s, "from_moments");
  NaturalParams p{Matrix(t.rows(), t.cols()), Matrix(t.rows(), t.cols()), family};
  for (Eigen::Index i = 0; i < t.m.size(); ++i) {
    const double m = t.m(i);
    switch (family) {
      case Family::Gaussian: {
        if (!(t.s(i) > 0.0)) throw DomainError("gaussian inversion needs s > 0", i, t.s(i));
        const double s = std::max(t.s(i), kVarianceFloor);
        p.alpha(i) = m / s;
        p.beta(i) = -1.0 / s;
        break;
      }
      case Family::Gamma: {
        if (!(m > 0.0)) throw DomainError("gamma inversion needs m > 0", i, m);
        if (!(t.s(i) > 0.0)) throw DomainError("gamma inversion needs s > 0", i, t.s(i));
        const double s = std::max(t.s(i), kVarianceFloor);
        const double rate = m / s;
        p.alpha(i) = m * rate - 1.0;
        p.beta(i) = -rate;
        break;
      }
      case Family::Poisson:
        if (!(m > 0.0)) throw DomainError("poisson inversion needs m > 0", i, m);
        p.alpha(i) = m;
        p.beta(i) = kPoissonBetaSentinel;
        break;
    }
  }
  return p;
}

GammaShapeRate to_shape_rate(const NaturalParams& p) {
  if (p.family != Family::Gamma) throw DomainError("to_shape_rate needs a gamma family", 0, 0.0);
  validate(p);
  return {(p.alpha.array() + 1.0).matrix(), (-p.beta.array()).matrix()};
}

NaturalParams gamma_from_shape_rate(const Matrix& shape, const Matrix& rate) {
  require_same_shape(shape, rate, "gamma_from_shape_rate");
  NaturalParams p{(shape.array() - 1.0).matrix(), (-rate.array()).matrix(), Family::Gamma};
  validate(p);
  return p;
}

NaturalParams poisson_from_rate(const Matrix& lambda) {
  NaturalParams p{lambda, Matrix::Constant(lambda.rows(), lambda.cols(), kPoissonBetaSentinel),
                  Family::Poisson};
  validate(p);
  return p;
}

NaturalParams gaussian_from_mean_var(const Matrix& mean, const Matrix& var) {
  return from_moments(MomentTensor{mean, var}, Family::Gaussian);
}

Matrix sample(const NaturalParams& p, std::size_t n, std::uint64_t seed) {
  validate(p);
  if (n == 0) throw DomainError("sample count must be >= 1", 0, 0.0);
  detail::Rng rng(seed);
  Matrix out(p.alpha.size(), static_cast<Eigen::Index>(n));
  const MomentTensor mom = to_moments(p);
  for (Eigen::Index i = 0; i < p.alpha.size(); ++i) {
    switch (p.family) {
      case Family::Gaussian: {
        boost::random::normal_distribution<double> dist(mom.m(i), std::sqrt(mom.s(i)));
        for (std::size_t k = 0; k < n; ++k) out(i, static_cast<Eigen::Index>(k)) = dist(rng);
        break;
      }
      case Family::Gamma: {
        const double shape = p.alpha(i) + 1.0;
        const double rate = -p.beta(i);
        boost::random::gamma_distribution<double> dist(shape, 1.0 / rate);
        for (std::size_t k = 0; k < n; ++k) out(i, static_cast<Eigen::Index>(k)) = dist(rng);
        break;
      }
      case Family::Poisson: {
        boost::random::poisson_distribution<long, double> dist(p.alpha(i));
        for (std::size_t k = 0; k < n; ++k) {
          out(i, static_cast<Eigen::Index>(k)) = static_cast<double>(dist(rng));
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace spgru
