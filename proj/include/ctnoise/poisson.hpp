#pragma once

/**
 * @file poisson.hpp
 * @brief Poisson sampling, central-moment polynomials and tail bounds.
 *
 * mu_r(lambda) = E[(S - lambda)^r] for S ~ Pois(lambda) is a polynomial in
 * lambda of degree floor(r/2) with no constant term (r >= 1), generated by
 *
 *   mu_0 = 1,  mu_1 = 0,  mu_{r+1} = lambda (mu_r' + r mu_{r-1}).
 *
 * Coefficients are kept as exact integers and converted only on evaluation.
 */

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ctnoise/rng.hpp"

namespace ctnoise {

inline constexpr int kMaxMomentOrder = 20;

struct CentralMomentPoly {
  int r = 0;
  /// Coefficients of lambda^0, lambda^1, ...
  std::vector<boost::multiprecision::cpp_int> coeffs;

  [[nodiscard]] int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }

  [[nodiscard]] double operator()(double lambda) const {
    long double acc = 0.0L;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
      acc = acc * lambda + it->convert_to<long double>();
    }
    return static_cast<double>(acc);
  }
};

namespace detail {

using Coeffs = std::vector<boost::multiprecision::cpp_int>;

inline void trim(Coeffs& c) {
  while (c.size() > 1 && c.back() == 0) c.pop_back();
}

}  // namespace detail

[[nodiscard]] inline CentralMomentPoly central_moment_poly(int r) {
  if (r < 0 || r > kMaxMomentOrder) {
    throw std::invalid_argument("central_moment_poly: order must be in [0, " + std::to_string(kMaxMomentOrder) +
                                "], got " + std::to_string(r));
  }
  detail::Coeffs prev{1};  // mu_0
  detail::Coeffs cur{0};   // mu_1
  if (r == 0) return {0, prev};
  for (int k = 1; k < r; ++k) {
    // mu_{k+1}[i] = i * mu_k[i] + k * mu_{k-1}[i-1]
    detail::Coeffs next(std::max(cur.size(), prev.size() + 1), 0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i] += cur[i] * static_cast<unsigned>(i);
    for (std::size_t i = 0; i < prev.size(); ++i) next[i + 1] += prev[i] * static_cast<unsigned>(k);
    detail::trim(next);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return {r, cur};
}

struct CountSample {
  std::int64_t value = 0;
  double mean = 0.0;
};

/// Exact Poisson draw (inversion for small means, rejection for large ones).
[[nodiscard]] inline CountSample sample_direct(double lambda, Engine& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("sample_direct: lambda must be positive and finite");
  }
  std::poisson_distribution<std::int64_t> dist(lambda);
  return {dist(rng), lambda};
}

/// V ~ Pois(N) photons sent, each surviving independently with probability p.
[[nodiscard]] inline CountSample sample_thinned(std::int64_t N, double p, Engine& rng) {
  if (N < 1) throw std::invalid_argument("sample_thinned: N must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("sample_thinned: p must lie in (0, 1]");
  std::poisson_distribution<std::int64_t> sent(static_cast<double>(N));
  const std::int64_t v = sent(rng);
  if (p == 1.0 || v == 0) return {v, static_cast<double>(N) * p};
  std::binomial_distribution<std::int64_t> survive(v, p);
  return {survive(rng), static_cast<double>(N) * p};
}

[[nodiscard]] inline double poisson_pmf(std::int64_t k, double lambda) {
  if (k < 0) return 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(-lambda + kd * std::log(lambda) - std::lgamma(kd + 1.0));
}

/// E|S - lambda|^r by center-outward summation of the series.
[[nodiscard]] inline double abs_central_moment(int r, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("abs_central_moment: lambda must be positive and finite");
  }
  if (r < 1 || r > 10) throw std::invalid_argument("abs_central_moment: r must lie in [1, 10]");
  constexpr long double tol = 1e-16L;
  const auto k0 = static_cast<std::int64_t>(std::floor(lambda));
  const long double pmf0 = poisson_pmf(k0, lambda);
  const auto term = [&](std::int64_t k, long double pmf) {
    return std::pow(std::abs(static_cast<long double>(k) - lambda), static_cast<long double>(r)) * pmf;
  };

  long double sum = term(k0, pmf0);
  // Each side is a log-concave sequence: stop once it is decreasing and negligible.
  long double pmf = pmf0;
  long double last = sum;
  for (std::int64_t k = k0 + 1;; ++k) {
    pmf *= lambda / static_cast<long double>(k);
    const long double t = term(k, pmf);
    sum += t;
    if (t < last && t <= tol * sum) break;
    if (pmf == 0.0L) break;
    last = t;
  }
  pmf = pmf0;
  last = term(k0, pmf0);
  for (std::int64_t k = k0 - 1; k >= 0; --k) {
    pmf *= static_cast<long double>(k + 1) / lambda;
    const long double t = term(k, pmf);
    sum += t;
    if (t < last && t <= tol * sum) break;
    last = t;
  }
  return static_cast<double>(sum);
}

/// Chernoff bound P(S <= a lambda) <= exp(-lambda (a ln a - a + 1)), 0 < a < 1.
[[nodiscard]] inline double lower_tail_bound(double lambda, double a) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lower_tail_bound: lambda must be positive");
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("lower_tail_bound: a must lie in (0, 1)");
  return std::exp(-lambda * (a * std::log(a) - a + 1.0));
}

}  // namespace ctnoise
