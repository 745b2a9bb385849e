#pragma once

/**
 * @file phantoms.hpp
 * @brief Attenuation functions on the closed unit disk and their X-ray transform.
 *
 * A line through the disk is identified by an offset s in (0, 1] and a
 * direction tau = (cos theta, sin theta); it is the set {x : <x, tau> = s}.
 * Points on it are parametrized as x = s*tau + t*tau_perp with
 * tau_perp = (-sin theta, cos theta), and the chord through the disk is
 * t in [-sqrt(1 - s^2), sqrt(1 - s^2)].
 *
 * Three phantom families are provided. The constant disk and the radial
 * parabola have closed-form transforms that serve as exact oracles; the
 * off-center Gaussian bump is integrated numerically.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctnoise/errors.hpp"
#include "ctnoise/quadrature.hpp"

namespace ctnoise {

inline constexpr int kDefaultTransformOrder = 32;

/// A line y = (s, theta) in the line space Z.
struct LineCoord {
  double s = 0.0;
  double theta = 0.0;
};

/// Whether `line` satisfies 0 < s <= 1 and 0 <= theta < 2*pi.
[[nodiscard]] inline bool is_valid(const LineCoord& line) noexcept {
  return line.s > 0.0 && line.s <= 1.0 && line.theta >= 0.0 && line.theta < 2.0 * std::numbers::pi;
}

struct Phantom {
  std::string id;
  std::string kind;
  std::function<double(double, double)> evaluate;
  double lipschitz_bound = 0.0;
  double sup_bound = 0.0;
  double inf_bound = 0.0;
  /// Empty when no closed form is known.
  std::function<double(const LineCoord&)> closed_form_transform;

  [[nodiscard]] bool has_closed_form() const noexcept { return static_cast<bool>(closed_form_transform); }
  [[nodiscard]] double operator()(double x, double y) const { return evaluate(x, y); }
};

/// Parameter range of the chord L_y intersected with the disk. Accepts s in [0, 1].
[[nodiscard]] inline std::pair<double, double> chord_interval(const LineCoord& line) noexcept {
  const double half = std::sqrt(std::max(0.0, 1.0 - line.s * line.s));
  return {-half, half};
}

/// Fixed-order Gauss-Legendre integral of the phantom along the chord, with no
/// closed-form shortcut.
[[nodiscard]] inline double xray_transform_quadrature(const Phantom& phantom, const LineCoord& line,
                                                      int quad_order = kDefaultTransformOrder) {
  const auto [lo, hi] = chord_interval(line);
  const auto& rule = gauss_legendre(quad_order);
  if (hi <= lo) return 0.0;
  const double c = std::cos(line.theta);
  const double s = std::sin(line.theta);
  const double half = 0.5 * (hi - lo);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.order(); ++i) {
    const double t = half * rule.nodes[i];
    acc += rule.weights[i] * phantom.evaluate(line.s * c - t * s, line.s * s + t * c);
  }
  return acc * half;
}

/// X-ray transform Xf(y), clamped to [0, 2 * sup f].
[[nodiscard]] inline double xray_transform(const Phantom& phantom, const LineCoord& line,
                                           int quad_order = kDefaultTransformOrder) {
  if (quad_order < 2) {
    throw std::invalid_argument("xray_transform: quad_order must be >= 2");
  }
  const double value = phantom.has_closed_form() ? phantom.closed_form_transform(line)
                                                 : xray_transform_quadrature(phantom, line, quad_order);
  return std::clamp(value, 0.0, 2.0 * phantom.sup_bound);
}

// ---------------------------------------------------------------------------
// Catalog

[[nodiscard]] inline Phantom constant_phantom(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw ConfigError("constant phantom requires c > 0, got " + std::to_string(c));
  }
  Phantom p;
  p.id = "constant(c=" + std::to_string(c) + ")";
  p.kind = "constant";
  p.evaluate = [c](double, double) { return c; };
  p.lipschitz_bound = 0.0;
  p.sup_bound = c;
  p.inf_bound = c;
  p.closed_form_transform = [c](const LineCoord& y) {
    return 2.0 * c * std::sqrt(std::max(0.0, 1.0 - y.s * y.s));
  };
  return p;
}

/// f(x) = alpha + beta * (1 - |x|^2).
[[nodiscard]] inline Phantom parabola_phantom(double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("parabola phantom requires alpha > 0, got " + std::to_string(alpha));
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ConfigError("parabola phantom requires beta >= 0, got " + std::to_string(beta));
  }
  Phantom p;
  p.id = "parabola(alpha=" + std::to_string(alpha) + ",beta=" + std::to_string(beta) + ")";
  p.kind = "parabola";
  p.evaluate = [alpha, beta](double x, double y) {
    return alpha + beta * std::max(0.0, 1.0 - (x * x + y * y));
  };
  p.lipschitz_bound = 2.0 * beta;
  p.sup_bound = alpha + beta;
  p.inf_bound = alpha;
  p.closed_form_transform = [alpha, beta](const LineCoord& y) {
    const double w = std::max(0.0, 1.0 - y.s * y.s);
    return 2.0 * alpha * std::sqrt(w) + (4.0 * beta / 3.0) * w * std::sqrt(w);
  };
  return p;
}

struct BumpParams {
  double base = 0.2;
  double amplitude = 1.0;
  double center_x = 0.3;
  double center_y = 0.2;
  double width = 0.25;
};

/// f(x) = base + amplitude * exp(-|x - c|^2 / (2 width^2)). No closed-form transform.
[[nodiscard]] inline Phantom bump_phantom(const BumpParams& bp = {}) {
  if (!(bp.base > 0.0)) throw ConfigError("bump phantom requires base > 0");
  if (!(bp.amplitude >= 0.0)) throw ConfigError("bump phantom requires amplitude >= 0");
  if (!(bp.width > 0.0)) throw ConfigError("bump phantom requires width > 0");
  if (std::hypot(bp.center_x, bp.center_y) >= 1.0) {
    throw ConfigError("bump phantom center must lie inside the unit disk");
  }
  Phantom p;
  p.id = "bump(base=" + std::to_string(bp.base) + ",amplitude=" + std::to_string(bp.amplitude) +
         ",center=(" + std::to_string(bp.center_x) + "," + std::to_string(bp.center_y) +
         "),width=" + std::to_string(bp.width) + ")";
  p.kind = "bump";
  p.evaluate = [bp](double x, double y) {
    const double dx = x - bp.center_x;
    const double dy = y - bp.center_y;
    return bp.base + bp.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * bp.width * bp.width));
  };
  // max |d/dr a*exp(-r^2/2w^2)| is attained at r = w.
  p.lipschitz_bound = bp.amplitude / bp.width * std::exp(-0.5);
  p.sup_bound = bp.base + bp.amplitude;
  p.inf_bound = bp.base;
  return p;
}

/// The three default phantoms.
[[nodiscard]] inline std::vector<Phantom> builtin_phantoms() {
  return {constant_phantom(0.5), parabola_phantom(0.5, 0.5), bump_phantom()};
}

/// Parses a tagged phantom record, e.g. {"kind": "parabola", "alpha": 0.5, "beta": 0.5}.
[[nodiscard]] inline Phantom phantom_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("phantom: expected an object with a string 'kind'");
  }
  const auto number = [&j](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("phantom: '") + key + "' must be a number");
    return j[key].get<double>();
  };
  const auto kind = j["kind"].get<std::string>();
  if (kind == "constant") return constant_phantom(number("c", 0.5));
  if (kind == "parabola") return parabola_phantom(number("alpha", 0.5), number("beta", 0.5));
  if (kind == "bump") {
    BumpParams bp;
    bp.base = number("base", bp.base);
    bp.amplitude = number("amplitude", bp.amplitude);
    bp.center_x = number("center_x", bp.center_x);
    bp.center_y = number("center_y", bp.center_y);
    bp.width = number("width", bp.width);
    return bump_phantom(bp);
  }
  throw ConfigError("phantom: unknown kind '" + kind + "'");
}

}  // namespace ctnoise
