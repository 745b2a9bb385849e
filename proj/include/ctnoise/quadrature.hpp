#pragma once

// Fixed-order Gauss-Legendre rules on [-1, 1], computed once per order and
// cached for the lifetime of the process.

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctnoise {

struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t order() const noexcept { return nodes.size(); }
};

namespace detail {

inline GaussLegendreRule build_gauss_legendre(int order) {
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_order.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(order - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (order % 2 == 1) rule.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
  return rule;
}

}  // namespace detail

/// Returns the cached `order`-point Gauss-Legendre rule. Thread-safe.
inline const GaussLegendreRule& gauss_legendre(int order) {
  if (order < 2) {
    throw std::invalid_argument("gauss_legendre: order must be >= 2, got " + std::to_string(order));
  }
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, detail::build_gauss_legendre(order)).first;
  return it->second;
}

/// Integrates `fn` over [lo, hi] with a fixed-order rule.
template <class Fn>
double integrate(Fn&& fn, double lo, double hi, int order) {
  const auto& rule = gauss_legendre(order);
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.order(); ++i) {
    acc += rule.weights[i] * fn(mid + half * rule.nodes[i]);
  }
  return acc * half;
}

/// Tensor-product rule over the rectangle [x0, x1] x [y0, y1].
template <class Fn>
double integrate_2d(Fn&& fn, double x0, double x1, double y0, double y1, int order) {
  const auto& rule = gauss_legendre(order);
  const double hx = 0.5 * (x1 - x0);
  const double mx = 0.5 * (x1 + x0);
  const double hy = 0.5 * (y1 - y0);
  const double my = 0.5 * (y1 + y0);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.order(); ++i) {
    const double x = mx + hx * rule.nodes[i];
    double row = 0.0;
    for (std::size_t k = 0; k < rule.order(); ++k) {
      row += rule.weights[k] * fn(x, my + hy * rule.nodes[k]);
    }
    acc += rule.weights[i] * row;
  }
  return acc * hx * hy;
}

}  // namespace ctnoise
