#pragma once

/**
 * @file discretization.hpp
 * @brief The (n, m) product grid on the line space, step fields and test functions.
 *
 * Offsets are arcsine spaced, s_j = sin(pi j / 2n), and angles uniform,
 * theta_k = 2 pi k / m. Under u = arcsin(s) the measure
 * nu = (1 - s^2)^{-1/2} ds dtheta becomes du dtheta, so every cell
 * A_{j,k} = (s_{j-1}, s_j] x (theta_{k-1}, theta_k] has measure pi^2 / nm.
 *
 * Cells are stored 0-based: cell (i, l) is A_{i+1, l+1} and its
 * representative line is the corner y_{i+1, l+1} = (s_{i+1}, theta_{l+1}).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctnoise/errors.hpp"
#include "ctnoise/io.hpp"
#include "ctnoise/phantoms.hpp"
#include "ctnoise/quadrature.hpp"

namespace ctnoise {

inline constexpr int kDefaultCellOrder = 8;

class Grid {
 public:
  Grid(int n, int m) : n_(n), m_(m) {
    if (n < 1 || m < 1) {
      throw std::invalid_argument("make_grid: n and m must be >= 1, got n=" + std::to_string(n) +
                                  " m=" + std::to_string(m));
    }
    u_nodes_.resize(static_cast<std::size_t>(n) + 1);
    s_nodes_.resize(static_cast<std::size_t>(n) + 1);
    theta_nodes_.resize(static_cast<std::size_t>(m) + 1);
    for (int j = 0; j <= n; ++j) {
      u_nodes_[static_cast<std::size_t>(j)] = std::numbers::pi * j / (2.0 * n);
      s_nodes_[static_cast<std::size_t>(j)] = std::sin(u_nodes_[static_cast<std::size_t>(j)]);
    }
    s_nodes_.front() = 0.0;
    s_nodes_.back() = 1.0;
    for (int k = 0; k <= m; ++k) {
      theta_nodes_[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * k / m;
    }
  }

  [[nodiscard]] int n() const noexcept { return n_; }
  [[nodiscard]] int m() const noexcept { return m_; }
  [[nodiscard]] std::size_t cells() const noexcept {
    return static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_);
  }
  [[nodiscard]] std::size_t index(std::size_t i, std::size_t l) const noexcept {
    return i * static_cast<std::size_t>(m_) + l;
  }

  [[nodiscard]] std::span<const double> s_nodes() const noexcept { return s_nodes_; }
  [[nodiscard]] std::span<const double> u_nodes() const noexcept { return u_nodes_; }
  [[nodiscard]] std::span<const double> theta_nodes() const noexcept { return theta_nodes_; }

  /// nu(A) computed from the cell's extent in (u, theta).
  [[nodiscard]] double cell_measure(std::size_t i, std::size_t l) const noexcept {
    // Node differences in long double keep the uniform value to the last bit.
    constexpr long double pi = std::numbers::pi_v<long double>;
    const long double du = pi * static_cast<long double>(i + 1) / (2.0L * n_) - pi * static_cast<long double>(i) / (2.0L * n_);
    const long double dt = 2.0L * pi * static_cast<long double>(l + 1) / m_ - 2.0L * pi * static_cast<long double>(l) / m_;
    return static_cast<double>(du * dt);
  }

  /// The nominal cell measure pi^2 / nm.
  [[nodiscard]] double uniform_cell_measure() const noexcept {
    return std::numbers::pi * std::numbers::pi / (static_cast<double>(n_) * m_);
  }

  /// Corner line of cell (i, l). theta_m = 2 pi is reported as 0.
  [[nodiscard]] LineCoord corner(std::size_t i, std::size_t l) const noexcept {
    const double theta = (l + 1 == static_cast<std::size_t>(m_)) ? 0.0 : theta_nodes_[l + 1];
    return {s_nodes_[i + 1], theta};
  }

  /// Cell containing `y` under the half-open convention s in (s_{j-1}, s_j],
  /// theta in (theta_{k-1}, theta_k]. s = 0 goes to the first row and
  /// theta = 0 (identified with 2 pi) to the last column.
  [[nodiscard]] std::pair<std::size_t, std::size_t> locate(const LineCoord& y) const noexcept {
    const auto s_it = std::lower_bound(s_nodes_.begin() + 1, s_nodes_.end(), y.s);
    const auto t_it = std::lower_bound(theta_nodes_.begin() + 1, theta_nodes_.end(), y.theta);
    auto i = static_cast<std::size_t>(s_it - s_nodes_.begin()) - 1;
    auto l = static_cast<std::size_t>(t_it - theta_nodes_.begin()) - 1;
    i = std::min(i, static_cast<std::size_t>(n_) - 1);
    if (y.theta <= 0.0) l = static_cast<std::size_t>(m_) - 1;
    l = std::min(l, static_cast<std::size_t>(m_) - 1);
    return {i, l};
  }

  friend bool operator==(const Grid& a, const Grid& b) noexcept { return a.n_ == b.n_ && a.m_ == b.m_; }

 private:
  int n_;
  int m_;
  std::vector<double> u_nodes_;
  std::vector<double> s_nodes_;
  std::vector<double> theta_nodes_;
};

[[nodiscard]] inline Grid make_grid(int n, int m) { return Grid(n, m); }

/// A simple function on Z, constant on each cell. Row-major n x m values.
struct StepField {
  Grid grid;
  std::vector<double> values;

  explicit StepField(Grid g) : grid(std::move(g)), values(grid.cells(), 0.0) {}
  StepField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.cells()) throw std::invalid_argument("StepField: value count does not match grid");
  }

  [[nodiscard]] double& at(std::size_t i, std::size_t l) { return values[grid.index(i, l)]; }
  [[nodiscard]] double at(std::size_t i, std::size_t l) const { return values[grid.index(i, l)]; }
  [[nodiscard]] double operator()(const LineCoord& y) const {
    const auto [i, l] = grid.locate(y);
    return at(i, l);
  }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(where) + ": grid mismatch (" + std::to_string(a.n()) + "x" +
                                std::to_string(a.m()) + " vs " + std::to_string(b.n()) + "x" +
                                std::to_string(b.m()) + ")");
  }
}

/// ||field||_2 in L^2(nu), exact for a step field.
[[nodiscard]] inline double l2_norm(const StepField& field) {
  double acc = 0.0;
  for (const double v : field.values) acc += v * v;
  return std::sqrt(field.grid.uniform_cell_measure() * acc);
}

/// X_{n,m} f: the transform sampled at each cell's corner line.
[[nodiscard]] inline StepField discretize_transform(const Phantom& phantom, const Grid& grid,
                                                    int quad_order = kDefaultTransformOrder) {
  StepField field(grid);
  for (std::size_t i = 0; i < static_cast<std::size_t>(grid.n()); ++i) {
    for (std::size_t l = 0; l < static_cast<std::size_t>(grid.m()); ++l) {
      field.at(i, l) = xray_transform(phantom, grid.corner(i, l), quad_order);
    }
  }
  return field;
}

/// Point `index` of the 2-D R2 low-discrepancy sequence, in (0, 1)^2.
[[nodiscard]] inline std::pair<double, double> r2_point(std::size_t index) noexcept {
  constexpr double g = 1.32471795724474602596;  // plastic number
  constexpr double a1 = 1.0 / g;
  constexpr double a2 = 1.0 / (g * g);
  const double k = static_cast<double>(index) + 1.0;
  double x = 0.5 + a1 * k;
  double y = 0.5 + a2 * k;
  return {x - std::floor(x), y - std::floor(y)};
}

/// Quasi-random line in Z, uniform with respect to nu.
[[nodiscard]] inline LineCoord quasi_random_line(std::size_t index) noexcept {
  const auto [a, b] = r2_point(index);
  return {std::sin(0.5 * std::numbers::pi * a), 2.0 * std::numbers::pi * b};
}

/// max |X_{n,m} f(y) - Xf(y)| over `samples` quasi-random lines.
[[nodiscard]] inline double sup_error(const Phantom& phantom, const Grid& grid, std::size_t samples) {
  if (!phantom.has_closed_form()) {
    throw std::invalid_argument("sup_error: phantom '" + phantom.id + "' has no closed-form transform");
  }
  const StepField field = discretize_transform(phantom, grid);
  double worst = 0.0;
  for (std::size_t q = 0; q < samples; ++q) {
    const LineCoord y = quasi_random_line(q);
    worst = std::max(worst, std::abs(field(y) - xray_transform(phantom, y)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Test functions

/// g(s, theta) = B(s) (c0 + c1 cos(q theta) + c2 sin(q theta)), where B is the
/// standard bump exp(1 - 1/(1 - v^2)) on v in (-1, 1), mapped onto (s_lo, s_hi)
/// and normalized to peak value 1.
struct TestFunction {
  double s_lo = 0.1;
  double s_hi = 0.9;
  int q = 2;
  double c0 = 1.0;
  double c1 = 0.5;
  double c2 = 0.25;

  void validate() const {
    if (!(0.0 < s_lo && s_lo < s_hi && s_hi < 1.0)) {
      throw ConfigError("test function support must satisfy 0 < s_lo < s_hi < 1");
    }
  }

  [[nodiscard]] double envelope(double s) const noexcept {
    const double v = (2.0 * s - (s_lo + s_hi)) / (s_hi - s_lo);
    if (!(std::abs(v) < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - v * v));
  }

  [[nodiscard]] double operator()(double s, double theta) const noexcept {
    const double b = envelope(s);
    if (b == 0.0) return 0.0;
    return b * (c0 + c1 * std::cos(q * theta) + c2 * std::sin(q * theta));
  }

  [[nodiscard]] TestFunction scaled(double factor) const noexcept {
    TestFunction g = *this;
    g.c0 *= factor;
    g.c1 *= factor;
    g.c2 *= factor;
    return g;
  }

  [[nodiscard]] bool is_zero() const noexcept { return c0 == 0.0 && c1 == 0.0 && c2 == 0.0; }
};

[[nodiscard]] inline TestFunction test_function_from_json(const nlohmann::json& j) {
  TestFunction g;
  if (j.is_null()) return g;
  if (!j.is_object()) throw ConfigError("test_function must be an object");
  try {
    g.s_lo = j.value("s_lo", g.s_lo);
    g.s_hi = j.value("s_hi", g.s_hi);
    g.q = j.value("q", g.q);
    g.c0 = j.value("c0", g.c0);
    g.c1 = j.value("c1", g.c1);
    g.c2 = j.value("c2", g.c2);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("test_function: ") + e.what());
  }
  g.validate();
  return g;
}

/// gamma(A) = integral of g over A with respect to nu, for every cell of one grid.
struct CellMasses {
  Grid grid;
  std::vector<double> values;

  [[nodiscard]] double at(std::size_t i, std::size_t l) const { return values[grid.index(i, l)]; }
};

/// Per-cell tensor Gauss-Legendre quadrature in (u, theta), where nu = du dtheta.
template <class Fn>
[[nodiscard]] CellMasses cell_masses(const Fn& g, const Grid& grid, int quad_order = kDefaultCellOrder) {
  if (quad_order < 2) throw std::invalid_argument("cell_masses: quad_order must be >= 2");
  CellMasses out{grid, std::vector<double>(grid.cells(), 0.0)};
  const auto u = grid.u_nodes();
  const auto th = grid.theta_nodes();
  for (std::size_t i = 0; i < static_cast<std::size_t>(grid.n()); ++i) {
    for (std::size_t l = 0; l < static_cast<std::size_t>(grid.m()); ++l) {
      out.values[grid.index(i, l)] = integrate_2d(
          [&g](double uu, double t) { return g(std::sin(uu), t); }, u[i], u[i + 1], th[l], th[l + 1], quad_order);
    }
  }
  return out;
}

/// Composite quadrature of fn(s, theta) over Z with respect to nu, restricted to
/// u = arcsin(s) in [u_lo, u_hi].
template <class Fn>
[[nodiscard]] double integrate_nu(const Fn& fn, double u_lo, double u_hi, int panels_u, int panels_theta,
                                  int order) {
  double acc = 0.0;
  const double du = (u_hi - u_lo) / panels_u;
  const double dt = 2.0 * std::numbers::pi / panels_theta;
  for (int a = 0; a < panels_u; ++a) {
    double row = 0.0;
    for (int b = 0; b < panels_theta; ++b) {
      row += integrate_2d([&fn](double uu, double t) { return fn(std::sin(uu), t); }, u_lo + a * du,
                          u_lo + (a + 1) * du, b * dt, (b + 1) * dt, order);
    }
    acc += row;
  }
  return acc;
}

/// <field, g> = sum over cells of field value times gamma(A).
[[nodiscard]] inline double pair(const StepField& field, const CellMasses& g) {
  require_same_grid(field.grid, g.grid, "pair");
  double acc = 0.0;
  for (std::size_t c = 0; c < field.values.size(); ++c) acc += field.values[c] * g.values[c];
  return acc;
}

/// Row-major CSV of the field values (n rows, m columns).
[[nodiscard]] inline std::string field_to_csv(const StepField& field) {
  std::string out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(field.grid.n()); ++i) {
    for (std::size_t l = 0; l < static_cast<std::size_t>(field.grid.m()); ++l) {
      if (l) out += ',';
      out += format_number(field.at(i, l));
    }
    out += "\r\n";
  }
  return out;
}

[[nodiscard]] inline nlohmann::json grid_metadata(const Grid& grid) {
  return {{"n", grid.n()},
          {"m", grid.m()},
          {"cell_measure", grid.uniform_cell_measure()},
          {"s_nodes", std::vector<double>(grid.s_nodes().begin(), grid.s_nodes().end())},
          {"theta_nodes", std::vector<double>(grid.theta_nodes().begin(), grid.theta_nodes().end())},
          {"corner", "upper"}};
}

}  // namespace ctnoise
