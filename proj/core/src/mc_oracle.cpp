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

#include "spgru/mc_oracle.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include "random_util.hpp"
#include "spgru/error.hpp"

namespace spgru {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::SaturatingExp: return "satexp";
  }
  return "?";
}

void OracleOptions::validate() const {
  if (n < kMinOracleSamples) {
    throw ConfigError("oracle needs n >= " + std::to_string(kMinOracleSamples) + ", got " + std::to_string(n));
  }
  if (!(se_multiplier > 0.0)) throw ConfigError("se_multiplier must be > 0");
  if (!(approx_tolerance > 0.0)) throw ConfigError("approx_tolerance must be > 0");
}

SampleMoments sample_moments(const std::vector<double>& x) {
  if (x.size() < 2) throw ConfigError("need at least two samples");
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  SampleMoments r;
  r.mean = mean;
  r.var = m2 / (n - 1.0);
  r.mean_se = std::sqrt(r.var / n);
  const double pop_var = m2 / n;
  r.var_se = std::sqrt(std::max(m4 / n - pop_var * pop_var, 0.0) / n);
  return r;
}

namespace {

std::string fmt_point(const char* a, double x, const char* b, double y) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s=%.6g %s=%.6g", a, x, b, y);
  return buf;
}

OracleReport exact_report(std::string op, std::string point, std::string quantity, double closed, double mc,
                          double se, double multiplier) {
  OracleReport r{std::move(op), std::move(point), std::move(quantity), closed, mc, se};
  r.abs_error = std::abs(closed - mc);
  r.rel_error = closed != 0.0 ? r.abs_error / std::abs(closed) : r.abs_error;
  // The absolute slack only matters when every sample is identical.
  r.tolerance = multiplier * se + 1e-12 * std::max(1.0, std::abs(closed));
  r.pass = r.abs_error <= r.tolerance;
  return r;
}

OracleReport approx_report(std::string op, std::string point, std::string quantity, double closed, double mc,
                           double se, double tolerance) {
  OracleReport r{std::move(op), std::move(point), std::move(quantity), closed, mc, se};
  r.abs_error = std::abs(closed - mc);
  r.rel_error = closed != 0.0 ? r.abs_error / std::abs(closed) : r.abs_error;
  r.tolerance = tolerance;
  r.pass = r.abs_error <= tolerance;
  return r;
}

}  // namespace

std::vector<OracleReport> verify_lmm(const LinearLayerParams& p, const MomentTensor& a, const OracleOptions& opt) {
  opt.validate();
  const MomentTensor closed = lmm(a, p);
  const Eigen::Index out = p.w_m.rows(), in = p.w_m.cols();
  if (a.cols() != 1) throw ShapeError("verify_lmm expects a column input");

  detail::Rng rng(opt.seed);
  boost::random::normal_distribution<double> z;
  const Matrix w_sd = p.w_s.cwiseSqrt(), b_sd = p.b_s.cwiseSqrt(), a_sd = a.s.cwiseSqrt();
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(out), std::vector<double>(opt.n));
  std::vector<double> x(static_cast<std::size_t>(in));
  for (std::size_t k = 0; k < opt.n; ++k) {
    for (Eigen::Index i = 0; i < in; ++i) x[static_cast<std::size_t>(i)] = a.m(i) + a_sd(i) * z(rng);
    for (Eigen::Index j = 0; j < out; ++j) {
      double o = p.b_m(j) + b_sd(j) * z(rng);
      for (Eigen::Index i = 0; i < in; ++i) o += (p.w_m(j, i) + w_sd(j, i) * z(rng)) * x[static_cast<std::size_t>(i)];
      samples[static_cast<std::size_t>(j)][k] = o;
    }
  }
  std::vector<OracleReport> reports;
  for (Eigen::Index j = 0; j < out; ++j) {
    const SampleMoments s = sample_moments(samples[static_cast<std::size_t>(j)]);
    const std::string point = "out=" + std::to_string(j);
    reports.push_back(exact_report("lmm", point, "mean", closed.m(j), s.mean, s.mean_se, opt.se_multiplier));
    reports.push_back(exact_report("lmm", point, "var", closed.s(j), s.var, s.var_se, opt.se_multiplier));
  }
  return reports;
}

std::vector<NmmPoint> gaussian_grid() {
  std::vector<NmmPoint> g;
  for (double m : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) {
    for (double s : {0.0, 0.25, 1.0, 4.0}) g.emplace_back(m, s);
  }
  return g;
}

namespace {

// Mean and second/fourth central moments of g = exp(-gamma X), by quadrature
// (Gamma) or by summing the mass function (Poisson).
struct GMoments {
  double mean = 0.0, mu2 = 0.0, mu4 = 0.0;
};

GMoments g_moments_gamma(double shape, double rate, double gamma) {
  const boost::math::gamma_distribution<double> dist(shape, 1.0 / rate);
  boost::math::quadrature::exp_sinh<double> integrator;
  const double inf = std::numeric_limits<double>::infinity();
  auto central = [&](double center, int power) {
    return integrator.integrate(
        [&](double x) { return std::pow(std::exp(-gamma * x) - center, power) * boost::math::pdf(dist, x); }, 0.0,
        inf, 1e-12);
  };
  GMoments m;
  m.mean = central(0.0, 1);
  m.mu2 = central(m.mean, 2);
  m.mu4 = central(m.mean, 4);
  return m;
}

GMoments g_moments_poisson(double lambda, double gamma) {
  const auto kmax = static_cast<long long>(std::ceil(lambda + 40.0 * std::sqrt(lambda) + 60.0));
  const double log_lambda = std::log(lambda);
  std::vector<double> p(static_cast<std::size_t>(kmax + 1)), g(p.size());
  for (long long j = 0; j <= kmax; ++j) {
    const double jd = static_cast<double>(j);
    p[static_cast<std::size_t>(j)] = std::exp(jd * log_lambda - lambda - std::lgamma(jd + 1.0));
    g[static_cast<std::size_t>(j)] = std::exp(-gamma * jd);
  }
  GMoments m;
  for (std::size_t j = p.size(); j-- > 0;) m.mean += g[j] * p[j];
  for (std::size_t j = p.size(); j-- > 0;) {
    const double d2 = (g[j] - m.mean) * (g[j] - m.mean);
    m.mu2 += d2 * p[j];
    m.mu4 += d2 * d2 * p[j];
  }
  return m;
}

}  // namespace

std::vector<OracleReport> verify_nmm(Family family, Activation act, const std::vector<NmmPoint>& grid,
                                     const OracleOptions& opt, const NmmConstants& k) {
  opt.validate();
  k.validate();
  const bool gaussian_act = act == Activation::Sigmoid || act == Activation::Tanh;
  if (gaussian_act != (family == Family::Gaussian)) {
    throw ConfigError(std::string(to_string(act)) + " is not supported for family " + std::string(family_name(family)));
  }
  const std::string op = "nmm." + std::string(to_string(act)) + "." + std::string(family_name(family));
  std::vector<OracleReport> reports;
  std::vector<double> f(opt.n);
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const auto [a, b] = grid[idx];
    detail::Rng rng(detail::mix_seed(opt.seed, idx));
    MomentTensor closed;
    std::string point;
    if (family == Family::Gaussian) {
      if (!(b >= 0.0)) throw DomainError("Gaussian variance must be >= 0", static_cast<std::ptrdiff_t>(idx), b);
      point = fmt_point("m", a, "s", b);
      const MomentTensor o = MomentTensor::scalar(a, b);
      closed = act == Activation::Sigmoid ? nmm_sigmoid_gauss(o, k) : nmm_tanh_gauss(o, k);
      boost::random::normal_distribution<double> z;
      const double sd = std::sqrt(b);
      for (auto& v : f) {
        const double x = a + sd * z(rng);
        v = act == Activation::Sigmoid ? logistic(x) : std::tanh(x);
      }
    } else if (family == Family::Gamma) {
      if (!(a > 0.0 && b > 0.0)) throw DomainError("Gamma shape and rate must be > 0", static_cast<std::ptrdiff_t>(idx), a);
      point = fmt_point("shape", a, "rate", b);
      closed = nmm_gamma_shape_rate(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), k);
      std::gamma_distribution<double> dist(a, 1.0 / b);
      for (auto& v : f) v = std::exp(-k.gamma * dist(rng));
    } else {
      if (!(a > 0.0)) throw DomainError("Poisson rate must be > 0", static_cast<std::ptrdiff_t>(idx), a);
      point = fmt_point("lambda", a, "-", 0.0);
      closed = nmm_poisson(poisson_from_rate(Matrix::Constant(1, 1, a)), k);
      boost::random::poisson_distribution<long long, double> dist(a);
      for (auto& v : f) v = std::exp(-k.gamma * static_cast<double>(dist(rng)));
    }
    SampleMoments s = sample_moments(f);
    if (!gaussian_act) {
      // Standard errors from the exact central moments of g: for skewed
      // draws the sample fourth moment misses rare events and understates
      // them.
      const GMoments gm = family == Family::Gamma ? g_moments_gamma(a, b, k.gamma) : g_moments_poisson(a, k.gamma);
      const double n = static_cast<double>(opt.n);
      s.mean_se = std::sqrt(gm.mu2 / n);
      s.var_se = std::sqrt(std::max(gm.mu4 / n - (n - 3.0) / (n * (n - 1.0)) * gm.mu2 * gm.mu2, 0.0));
      // Samples hold g = exp(-gamma X); c (1 - g) near c would lose the low
      // digits to rounding, so the affine map is applied to the moments.
      s = {k.c - k.c * s.mean, k.c * k.c * s.var, k.c * s.mean_se, k.c * k.c * s.var_se};
    }
    if (gaussian_act) {
      reports.push_back(approx_report(op, point, "mean", closed.m(0), s.mean, s.mean_se, opt.approx_tolerance));
      reports.push_back(approx_report(op, point, "var", closed.s(0), s.var, s.var_se, opt.approx_tolerance));
    } else {
      reports.push_back(exact_report(op, point, "mean", closed.m(0), s.mean, s.mean_se, opt.se_multiplier));
      reports.push_back(exact_report(op, point, "var", closed.s(0), s.var, s.var_se, opt.se_multiplier));
    }
  }
  return reports;
}

std::pair<double, double> gamma_moments_quadrature(double shape, double rate, const NmmConstants& k) {
  if (!(shape > 0.0 && rate > 0.0)) throw DomainError("Gamma shape and rate must be > 0", 0, shape);
  const boost::math::gamma_distribution<double> dist(shape, 1.0 / rate);
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double x) { return -k.c * std::expm1(-k.gamma * x); };
  const double inf = std::numeric_limits<double>::infinity();
  const double tol = 1e-14;
  const double mean = integrator.integrate([&](double x) { return f(x) * boost::math::pdf(dist, x); }, 0.0, inf, tol);
  const double var = integrator.integrate(
      [&](double x) {
        const double d = f(x) - mean;
        return d * d * boost::math::pdf(dist, x);
      },
      0.0, inf, tol);
  return {mean, var};
}

std::pair<double, double> poisson_moments_series(double lambda, const NmmConstants& k) {
  if (!(lambda > 0.0)) throw DomainError("Poisson rate must be > 0", 0, lambda);
  const auto kmax = static_cast<long long>(std::ceil(lambda + 40.0 * std::sqrt(lambda) + 60.0));
  const double log_lambda = std::log(lambda);
  std::vector<double> p(static_cast<std::size_t>(kmax + 1)), f(p.size());
  for (long long j = 0; j <= kmax; ++j) {
    const double jd = static_cast<double>(j);
    p[static_cast<std::size_t>(j)] = std::exp(jd * log_lambda - lambda - std::lgamma(jd + 1.0));
    f[static_cast<std::size_t>(j)] = -k.c * std::expm1(-k.gamma * jd);
  }
  // Sum from the tail so that small terms are not swamped.
  double mean = 0.0;
  for (std::size_t j = p.size(); j-- > 0;) mean += f[j] * p[j];
  double var = 0.0;
  for (std::size_t j = p.size(); j-- > 0;) var += (f[j] - mean) * (f[j] - mean) * p[j];
  return {mean, var};
}

// ---------------------------------------------------------------------------
// Cell

namespace {

std::vector<double> row_major(const Matrix& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  }
  return v;
}

std::vector<double> variances(const Matrix& rho) {
  std::vector<double> v = row_major(rho);
  for (double& x : v) x = softplus(x);
  return v;
}

double sig(double x) { return logistic(x); }

}  // namespace

PointGru point_gru_means(const CellParams& p) {
  PointGru g;
  g.hidden = static_cast<std::size_t>(p.hidden);
  g.input = static_cast<std::size_t>(p.input);
  const GateParams* gates[3] = {&p.reset, &p.update, &p.candidate};
  for (int q = 0; q < 3; ++q) {
    g.u[q] = row_major(gates[q]->u_mean);
    g.w[q] = row_major(gates[q]->w_mean);
    g.b[q] = row_major(gates[q]->b_mean);
  }
  return g;
}

std::vector<double> gru_step(const PointGru& g, const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t H = g.hidden, D = g.input;
  if (x.size() != D || h.size() != H) throw ShapeError("gru_step: size mismatch");
  std::vector<double> r(H), z(H), rh(H), out(H);
  for (std::size_t j = 0; j < H; ++j) {
    double ar = g.b[0][j], az = g.b[1][j];
    for (std::size_t i = 0; i < D; ++i) {
      ar += g.u[0][j * D + i] * x[i];
      az += g.u[1][j * D + i] * x[i];
    }
    for (std::size_t i = 0; i < H; ++i) {
      ar += g.w[0][j * H + i] * h[i];
      az += g.w[1][j * H + i] * h[i];
    }
    r[j] = sig(ar);
    z[j] = sig(az);
  }
  for (std::size_t j = 0; j < H; ++j) rh[j] = r[j] * h[j];
  for (std::size_t j = 0; j < H; ++j) {
    double ac = g.b[2][j];
    for (std::size_t i = 0; i < D; ++i) ac += g.u[2][j * D + i] * x[i];
    for (std::size_t i = 0; i < H; ++i) ac += g.w[2][j * H + i] * rh[i];
    const double c = std::tanh(ac);
    out[j] = (1.0 - z[j]) * c + z[j] * h[j];
  }
  return out;
}

std::vector<OracleReport> verify_cell(const CellParams& p, const MomentTensor& x, const CellState& prev,
                                      const CellRules& rules, const CellOracleOptions& opt, const NmmConstants& k) {
  if (opt.n < 2) throw ConfigError("cell oracle needs n >= 2");
  const CellState closed = cell_step(x, prev, p, rules, k);
  const PointGru mean = point_gru_means(p);
  const GateParams* gates[3] = {&p.reset, &p.update, &p.candidate};
  std::vector<double> u_sd[3], w_sd[3], b_sd[3];
  for (int q = 0; q < 3; ++q) {
    u_sd[q] = variances(gates[q]->u_rho);
    w_sd[q] = variances(gates[q]->w_rho);
    b_sd[q] = variances(gates[q]->b_rho);
    for (auto* v : {&u_sd[q], &w_sd[q], &b_sd[q]}) {
      for (double& s : *v) s = std::sqrt(s);
    }
  }
  const std::size_t H = mean.hidden, D = mean.input;

  detail::Rng rng(opt.seed);
  boost::random::normal_distribution<double> z;
  PointGru draw = mean;
  std::vector<double> xs(D), hs(H);
  std::vector<std::vector<double>> samples(H, std::vector<double>(opt.n));
  for (std::size_t s = 0; s < opt.n; ++s) {
    for (int q = 0; q < 3; ++q) {
      for (std::size_t i = 0; i < draw.u[q].size(); ++i) draw.u[q][i] = mean.u[q][i] + u_sd[q][i] * z(rng);
      for (std::size_t i = 0; i < draw.w[q].size(); ++i) draw.w[q][i] = mean.w[q][i] + w_sd[q][i] * z(rng);
      for (std::size_t i = 0; i < draw.b[q].size(); ++i) draw.b[q][i] = mean.b[q][i] + b_sd[q][i] * z(rng);
    }
    for (std::size_t i = 0; i < D; ++i) xs[i] = x.m(static_cast<Eigen::Index>(i)) + std::sqrt(x.s(static_cast<Eigen::Index>(i))) * z(rng);
    for (std::size_t i = 0; i < H; ++i) {
      hs[i] = prev.h_m(static_cast<Eigen::Index>(i)) + std::sqrt(prev.h_s(static_cast<Eigen::Index>(i))) * z(rng);
    }
    const std::vector<double> out = gru_step(draw, xs, hs);
    for (std::size_t j = 0; j < H; ++j) samples[j][s] = out[j];
  }
  const std::string op = std::string("cell.") + std::string(to_string(rules.variance)) + "." +
                         std::string(to_string(rules.product));
  std::vector<OracleReport> reports;
  for (std::size_t j = 0; j < H; ++j) {
    const SampleMoments m = sample_moments(samples[j]);
    const std::string point = "unit=" + std::to_string(j);
    const auto jj = static_cast<Eigen::Index>(j);
    reports.push_back(approx_report(op, point, "mean", closed.h_m(jj), m.mean, m.mean_se, opt.tolerance));
    reports.push_back(approx_report(op, point, "var", closed.h_s(jj), m.var, m.var_se, opt.tolerance));
  }
  return reports;
}

bool all_pass(const std::vector<OracleReport>& reports) {
  for (const auto& r : reports) {
    if (!r.pass) return false;
  }
  return true;
}

std::string format_reports(const std::vector<OracleReport>& reports) {
  std::ostringstream os;
  os << "operation\tpoint\tquantity\tclosed\tmc\tse\tabs_error\ttolerance\tpass\n";
  char buf[512];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s\t%s\t%s\t%.10g\t%.10g\t%.3g\t%.3g\t%.3g\t%s\n", r.operation.c_str(),
                  r.point.c_str(), r.quantity.c_str(), r.closed, r.mc, r.se, r.abs_error, r.tolerance,
                  r.pass ? "yes" : "no");
    os << buf;
  }
  return os.str();
}

}  // namespace spgru
