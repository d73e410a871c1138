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

// Exponential-family parameter containers and the mappings between natural
// parameters (alpha, beta) and moment parameters (mean, variance).
//
// Conventions per family:
//   Gaussian  m = -alpha / beta,        s = -1 / beta,          beta < 0
//   Gamma     m = -(alpha + 1) / beta,  s = (alpha + 1) / beta^2,
//             alpha > -1, beta < 0  (shape = alpha + 1, rate = -beta)
//   Poisson   m = s = alpha (the rate lambda > 0); beta is never read.

#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace spgru {

using Matrix = Eigen::MatrixXd;

enum class Family : std::uint32_t { Gaussian = 0, Gamma = 1, Poisson = 2 };

std::string_view family_name(Family f);

/// Floor applied to variances on both sides of the moment/natural mapping.
inline constexpr double kVarianceFloor = 1e-12;

/// Sentinel stored in beta for Poisson parameters.
inline constexpr double kPoissonBetaSentinel = 0.0;

struct NaturalParams {
  Matrix alpha;
  Matrix beta;
  Family family = Family::Gaussian;

  Eigen::Index rows() const { return alpha.rows(); }
  Eigen::Index cols() const { return alpha.cols(); }
};

/// Factorized random tensor in mean/variance form.
struct MomentTensor {
  Matrix m;
  Matrix s;

  MomentTensor() = default;
  MomentTensor(Matrix mean, Matrix var) : m(std::move(mean)), s(std::move(var)) {}

  static MomentTensor deterministic(const Matrix& mean) {
    return {mean, Matrix::Zero(mean.rows(), mean.cols())};
  }
  static MomentTensor scalar(double mean, double var) {
    return {Matrix::Constant(1, 1, mean), Matrix::Constant(1, 1, var)};
  }

  Eigen::Index rows() const { return m.rows(); }
  Eigen::Index cols() const { return m.cols(); }
};

/// Throws DomainError naming the first offending element.
void validate(const NaturalParams& p);

/// Throws ShapeError / DomainError if the invariants do not hold.
void validate(const MomentTensor& t);

MomentTensor to_moments(const NaturalParams& p);

NaturalParams from_moments(const MomentTensor& t, Family family);

/// Conventional parameters, used by the Gamma and Poisson activations.
struct GammaShapeRate {
  Matrix shape;
  Matrix rate;
};
GammaShapeRate to_shape_rate(const NaturalParams& p);
NaturalParams gamma_from_shape_rate(const Matrix& shape, const Matrix& rate);
NaturalParams poisson_from_rate(const Matrix& lambda);
NaturalParams gaussian_from_mean_var(const Matrix& mean, const Matrix& var);

/// n i.i.d. draws per element. Result is (elements x n), element index in
/// column-major order of p.alpha.
Matrix sample(const NaturalParams& p, std::size_t n, std::uint64_t seed);

}  // namespace spgru
