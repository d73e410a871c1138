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

// Sampling-based and analytic reference values for the moment-matching
// operations. Nothing here is on the inference path.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spgru/moments.hpp"
#include "spgru/network.hpp"

namespace spgru {

enum class Activation { Sigmoid, Tanh, SaturatingExp };

std::string_view to_string(Activation a);

struct OracleReport {
  std::string operation;  // e.g. "nmm.sigmoid"
  std::string point;      // human-readable parameter point
  std::string quantity;   // "mean" or "var"
  double closed = 0.0;
  double mc = 0.0;
  double se = 0.0;  // standard error of mc (see verify_nmm for Gamma/Poisson)
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;  // absolute tolerance actually applied
  bool pass = false;
};

inline constexpr std::size_t kMinOracleSamples = 10'000;

struct OracleOptions {
  std::size_t n = 1'000'000;
  std::uint64_t seed = 0;
  /// Exact identities pass when |closed - mc| <= se_multiplier * se.
  double se_multiplier = 4.0;
  /// Approximate (probit-based) closed forms pass within this distance.
  double approx_tolerance = 0.03;

  void validate() const;
};

/// Sample mean and variance with their standard errors.
struct SampleMoments {
  double mean = 0.0;
  double var = 0.0;
  double mean_se = 0.0;
  double var_se = 0.0;
};
SampleMoments sample_moments(const std::vector<double>& x);

/// Checks lmm() per output element against samples of W a + b with every
/// entry drawn independently from its Gaussian.
std::vector<OracleReport> verify_lmm(const LinearLayerParams& p, const MomentTensor& a,
                                     const OracleOptions& opt = {});

/// A parameter point: Gaussian (mean, var), Gamma (shape, rate) or
/// Poisson (rate, unused).
using NmmPoint = std::pair<double, double>;

/// The mean x variance grid used for the Gaussian activations.
std::vector<NmmPoint> gaussian_grid();

/// Sigmoid/Tanh need Family::Gaussian; SaturatingExp needs Gamma or Poisson.
/// Every point is sampled from its own stream. For Gamma and Poisson the
/// standard errors come from the exact central moments of exp(-gamma X)
/// (quadrature or series), not from the samples.
std::vector<OracleReport> verify_nmm(Family family, Activation act, const std::vector<NmmPoint>& grid,
                                     const OracleOptions& opt = {}, const NmmConstants& k = {});

/// Exact moments of c (1 - exp(-gamma X)) by numerical quadrature (Gamma)
/// and by summing the probability mass function (Poisson).
std::pair<double, double> gamma_moments_quadrature(double shape, double rate, const NmmConstants& k = {});
std::pair<double, double> poisson_moments_series(double lambda, const NmmConstants& k = {});

/// Plain-loop deterministic GRU step on point weights:
///   r = sig(U_r x + W_r h + b_r), z = sig(U_z x + W_z h + b_z)
///   c = tanh(U_c x + W_c (r * h) + b_c), h' = (1 - z) c + z h
struct PointGru {
  std::size_t hidden = 0, input = 0;
  std::vector<double> u[3], w[3], b[3];  // row-major; reset, update, candidate
};
PointGru point_gru_means(const CellParams& p);
std::vector<double> gru_step(const PointGru& g, const std::vector<double>& x, const std::vector<double>& h);

struct CellOracleOptions {
  std::size_t n = 100'000;
  std::uint64_t seed = 0;
  double tolerance = 0.05;
};

/// Samples every weight, bias, input and state entry, runs gru_step per
/// sample and compares the empirical state moments with cell_step.
std::vector<OracleReport> verify_cell(const CellParams& p, const MomentTensor& x, const CellState& prev,
                                      const CellRules& rules, const CellOracleOptions& opt = {},
                                      const NmmConstants& k = {});

bool all_pass(const std::vector<OracleReport>& reports);

/// One tab-separated line per report, with a header line.
std::string format_reports(const std::vector<OracleReport>& reports);

}  // namespace spgru
