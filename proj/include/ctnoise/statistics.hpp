#pragma once

/**
 * @file statistics.hpp
 * @brief Corrected CLT statistic, its linearization, and Berry-Esseen parameters.
 *
 * With lambda = N exp(-X_{n,m} f) cellwise, the centered and scaled field is
 *
 *   Z = sqrt(nmN) (Y - X_{n,m} f - C_{a,b}),
 *
 * where for the add-one normalization
 *
 *   C_{a,b} = sum_{r=1..b} (-1)^r e^{rX} / (r N^r)
 *           + sum_{r=2..a} (-1)^r mu_r(lambda) / (r (lambda + 1)^r),
 *
 * and for max-one / resample the b-sum is dropped and lambda + 1 becomes
 * lambda + exp(-lambda). The bias left over is of order N^{-kappa} with
 * kappa = min(a, 2b + 1) (add-one) or kappa = a (otherwise).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctnoise/discretization.hpp"
#include "ctnoise/errors.hpp"
#include "ctnoise/observation.hpp"
#include "ctnoise/phantoms.hpp"
#include "ctnoise/poisson.hpp"

namespace ctnoise {

struct CorrectionSpec {
  int a = 1;
  int b = 0;
  NormalizationMode mode = NormalizationMode::AddOne;

  [[nodiscard]] int kappa() const noexcept {
    return mode == NormalizationMode::AddOne ? std::min(a, 2 * b + 1) : a;
  }

  void validate() const {
    if (a < 1) throw std::invalid_argument("CorrectionSpec: a must be >= 1, got " + std::to_string(a));
    if (a > kMaxMomentOrder) throw std::invalid_argument("CorrectionSpec: a exceeds moment order limit");
    if (b < 0) throw std::invalid_argument("CorrectionSpec: b must be >= 0, got " + std::to_string(b));
  }
};

/// Exact correction C_{a,b} per cell (the quantity subtracted from Y - X).
[[nodiscard]] inline StepField correction_field(const StepField& xfield, std::int64_t N, const CorrectionSpec& spec) {
  spec.validate();
  if (N < 1) throw std::invalid_argument("correction_field: N must be >= 1");
  std::vector<CentralMomentPoly> mu;
  for (int r = 2; r <= spec.a; ++r) mu.push_back(central_moment_poly(r));
  const auto Nd = static_cast<double>(N);
  const bool add_one = spec.mode == NormalizationMode::AddOne;

  StepField out(xfield.grid);
  for (std::size_t c = 0; c < xfield.values.size(); ++c) {
    const double x = xfield.values[c];
    const double lambda = Nd * std::exp(-x);
    double acc = 0.0;
    if (add_one) {
      for (int r = 1; r <= spec.b; ++r) {
        const double sign = (r % 2 == 0) ? 1.0 : -1.0;
        acc += sign * std::exp(r * x) / (r * std::pow(Nd, r));
      }
    }
    const double denom = add_one ? lambda + 1.0 : lambda + std::exp(-lambda);
    for (int r = 2; r <= spec.a; ++r) {
      const double sign = (r % 2 == 0) ? 1.0 : -1.0;
      acc += sign * mu[static_cast<std::size_t>(r - 2)](lambda) / (r * std::pow(denom, r));
    }
    out.values[c] = acc;
  }
  return out;
}

/// Leading-order coefficients of the correction, C ~ c1 e^{X}/N + c2 e^{2X}/N^2.
struct SimplifiedCoefficients {
  double first = 0.0;
  double second = 0.0;
};

/// add-one: C ~ -e^X/(2N) - e^{2X}/(12 N^2).
/// max-one and resample: C ~ +e^X/(2N) + 5 e^{2X}/(12 N^2), from expanding
/// E log S with mu_2..mu_4 (the zero-count indicator only adds exponentially
/// small terms).
[[nodiscard]] constexpr SimplifiedCoefficients simplified_coefficients(NormalizationMode mode) noexcept {
  if (mode == NormalizationMode::AddOne) return {-0.5, -1.0 / 12.0};
  return {0.5, 5.0 / 12.0};
}

/// Truncated correction with `order` in {0, 1, 2} terms, using `mode`'s coefficients.
[[nodiscard]] inline StepField simplified_correction(const StepField& xfield, std::int64_t N,
                                                     NormalizationMode mode, int order) {
  if (order < 0 || order > 2) throw std::invalid_argument("simplified_correction: order must be 0, 1 or 2");
  const auto coef = simplified_coefficients(mode);
  const auto Nd = static_cast<double>(N);
  StepField out(xfield.grid);
  for (std::size_t c = 0; c < xfield.values.size(); ++c) {
    const double e = std::exp(xfield.values[c]);
    double v = 0.0;
    if (order >= 1) v += coef.first * e / Nd;
    if (order >= 2) v += coef.second * e * e / (Nd * Nd);
    out.values[c] = v;
  }
  return out;
}

/// sqrt(nmN) (Y - X - correction), cellwise.
[[nodiscard]] inline StepField z_from_correction(const StepField& yfield, const StepField& xfield,
                                                 const StepField& correction, std::int64_t N) {
  require_same_grid(yfield.grid, xfield.grid, "z_statistic");
  require_same_grid(yfield.grid, correction.grid, "z_statistic");
  const double scale = std::sqrt(static_cast<double>(yfield.grid.cells()) * static_cast<double>(N));
  StepField z(yfield.grid);
  for (std::size_t c = 0; c < z.values.size(); ++c) {
    z.values[c] = scale * (yfield.values[c] - xfield.values[c] - correction.values[c]);
  }
  return z;
}

[[nodiscard]] inline StepField z_statistic(const StepField& yfield, const StepField& xfield, std::int64_t N,
                                           const CorrectionSpec& spec) {
  return z_from_correction(yfield, xfield, correction_field(xfield, N, spec), N);
}

/// Linearized field sqrt(nmN) (Np - S) / (Np + 1).
[[nodiscard]] inline StepField w_field(const CountField& counts) {
  const auto Nd = static_cast<double>(counts.N);
  const double scale = std::sqrt(static_cast<double>(counts.grid.cells()) * Nd);
  StepField w(counts.grid);
  for (std::size_t c = 0; c < w.values.size(); ++c) {
    const double np = Nd * counts.p[c];
    w.values[c] = scale * (np - static_cast<double>(counts.counts[c])) / (np + 1.0);
  }
  return w;
}

/// Variance of <W, g>: sum nm N^2 p / (Np + 1)^2 gamma(A)^2.
[[nodiscard]] inline double sigma_squared(const StepField& xfield, std::int64_t N, const CellMasses& g) {
  require_same_grid(xfield.grid, g.grid, "sigma_squared");
  const auto Nd = static_cast<double>(N);
  const auto nm = static_cast<double>(xfield.grid.cells());
  double acc = 0.0;
  for (std::size_t c = 0; c < xfield.values.size(); ++c) {
    const double p = std::exp(-xfield.values[c]);
    const double d = Nd * p + 1.0;
    acc += nm * Nd * Nd * p / (d * d) * g.values[c] * g.values[c];
  }
  return acc;
}

/// Lyapunov ratio L = sigma^{-3} sum (nmN)^{3/2} E|S - Np|^3 / (Np + 1)^3 |gamma(A)|^3.
[[nodiscard]] inline double lyapunov_L(const StepField& xfield, std::int64_t N, const CellMasses& g) {
  const double s2 = sigma_squared(xfield, N, g);
  if (!(s2 > 0.0)) throw NumericalError("lyapunov_L: degenerate sigma^2 = 0");
  const auto Nd = static_cast<double>(N);
  const double scale = std::pow(static_cast<double>(xfield.grid.cells()) * Nd, 1.5);
  double acc = 0.0;
  for (std::size_t c = 0; c < xfield.values.size(); ++c) {
    const double gamma = std::abs(g.values[c]);
    if (gamma == 0.0) continue;
    const double np = Nd * std::exp(-xfield.values[c]);
    const double d = np + 1.0;
    acc += scale * abs_central_moment(3, np) / (d * d * d) * gamma * gamma * gamma;
  }
  return acc / std::pow(s2, 1.5);
}

struct VarianceQuadrature {
  int panels_u = 32;
  int panels_theta = 32;
  int order = 8;
  int transform_order = kDefaultTransformOrder;
};

/// pi^2 * integral of e^{Xf} g^2 dnu over u = arcsin(s) in [u_lo, u_hi].
template <class Fn>
[[nodiscard]] double asymptotic_variance(const Phantom& phantom, const Fn& g, double u_lo, double u_hi,
                                         const VarianceQuadrature& q = {}) {
  const double integral = integrate_nu(
      [&](double s, double theta) {
        const double gv = g(s, theta);
        if (gv == 0.0) return 0.0;
        return std::exp(xray_transform(phantom, {s, theta}, q.transform_order)) * gv * gv;
      },
      u_lo, u_hi, q.panels_u, q.panels_theta, q.order);
  return std::numbers::pi * std::numbers::pi * integral;
}

/// ||pi e^{Xf/2} g||_2^2, the variance of <Z, g> in the limit.
[[nodiscard]] inline double asymptotic_variance(const Phantom& phantom, const TestFunction& g,
                                                const VarianceQuadrature& q = {}) {
  if (g.is_zero()) return 0.0;
  return asymptotic_variance(phantom, g, std::asin(g.s_lo), std::asin(g.s_hi), q);
}

struct BerryEsseenReport {
  double sigma2 = 0.0;
  double L = 0.0;
  double raw_bound = 0.0;
  double composite_bound = 0.0;
  double asymptotic_variance = 0.0;
  int kappa = 1;
  double constant = 1.0;
};

inline constexpr double kBerryEsseenConstant = 0.5583;

/// The bracketed rate (nm)^{-1/2} + 1/n + 1/m + N^{-1/3} + (nm / N^kappa)^{1/3}.
[[nodiscard]] inline double composite_rate(int n, int m, std::int64_t N, int kappa) {
  const double nm = static_cast<double>(n) * m;
  const auto Nd = static_cast<double>(N);
  return 1.0 / std::sqrt(nm) + 1.0 / n + 1.0 / m + std::cbrt(1.0 / Nd) + std::cbrt(nm / std::pow(Nd, kappa));
}

[[nodiscard]] inline BerryEsseenReport be_bounds(const StepField& xfield, std::int64_t N, const CellMasses& g,
                                                 const CorrectionSpec& spec, double asymptotic_var,
                                                 double constant = 1.0) {
  BerryEsseenReport r;
  r.sigma2 = sigma_squared(xfield, N, g);
  r.L = lyapunov_L(xfield, N, g);
  r.raw_bound = kBerryEsseenConstant * r.L;
  r.kappa = spec.kappa();
  r.constant = constant;
  r.composite_bound = constant * composite_rate(xfield.grid.n(), xfield.grid.m(), N, r.kappa);
  r.asymptotic_variance = asymptotic_var;
  return r;
}

[[nodiscard]] inline nlohmann::json to_json(const BerryEsseenReport& r) {
  return {{"sigma2", r.sigma2},
          {"L", r.L},
          {"raw_bound", r.raw_bound},
          {"composite_bound", r.composite_bound},
          {"composite_constant", r.constant},
          {"kappa", r.kappa},
          {"asymptotic_variance", r.asymptotic_variance}};
}

}  // namespace ctnoise
