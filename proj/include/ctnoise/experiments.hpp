#pragma once

/**
 * @file experiments.hpp
 * @brief Seeded Monte Carlo drivers that check the limit theorems numerically.
 *
 * Determinism contract: replicate r of every configuration draws its counts
 * from KeyedRng(seed, r), i.e. each cell (i, l) of replicate r has its own
 * stream keyed by (seed, r, i, l). Replicates are evaluated into fixed slots
 * and reduced by pairwise summation, so tables are bit-identical for any
 * worker count. Configurations that share a seed share their random draws
 * (common random numbers across doses and normalization modes).
 */

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctnoise/discretization.hpp"
#include "ctnoise/errors.hpp"
#include "ctnoise/io.hpp"
#include "ctnoise/observation.hpp"
#include "ctnoise/phantoms.hpp"
#include "ctnoise/reduce.hpp"
#include "ctnoise/stat_tests.hpp"
#include "ctnoise/statistics.hpp"

namespace ctnoise {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  nlohmann::json phantom_spec = {{"kind", "parabola"}, {"alpha", 0.5}, {"beta", 0.5}};
  std::vector<std::pair<int, int>> grids{{16, 16}};
  /// Explicit dose list; when empty, doses come from the kappa' schedule.
  std::vector<std::int64_t> doses{100, 1000, 10000, 100000};
  std::optional<double> kappa_prime;
  std::vector<CorrectionSpec> corrections{CorrectionSpec{}};
  std::vector<NormalizationMode> modes{NormalizationMode::AddOne};
  /// Number of terms of the simplified correction used by the mode comparison.
  int simplified_order = 1;
  TestFunction test_function{};
  std::size_t replicates = 200;
  std::uint64_t seed = 20240917;
  unsigned workers = 1;
  Sampler sampler = Sampler::Direct;
  double alpha = 0.01;
  double ks_threshold = 0.05;
  double be_constant = 1.0;
  std::string output = ".";

  [[nodiscard]] Phantom phantom() const { return phantom_from_json(phantom_spec); }

  /// N = ceil((nm)^{1 / kappa'}) with kappa' defaulting to kappa - 1/2.
  [[nodiscard]] std::vector<std::int64_t> doses_for(int n, int m) const {
    if (!doses.empty()) return doses;
    const double kp = kappa_prime.value_or(corrections.front().kappa() - 0.5);
    return {static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(n) * m, 1.0 / kp)))};
  }

  void validate() const {
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (grids.empty()) throw ConfigError("at least one grid is required");
    for (const auto& [n, m] : grids) {
      if (n < 1 || m < 1) throw ConfigError("grid sizes must be >= 1");
    }
    for (const auto N : doses) {
      if (N < 1) throw ConfigError("doses must be >= 1");
    }
    if (doses.empty() && kappa_prime && !(*kappa_prime > 0.0)) throw ConfigError("kappa_prime must be positive");
    if (corrections.empty()) throw ConfigError("at least one correction is required");
    for (const auto& c : corrections) {
      try {
        c.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (modes.empty()) throw ConfigError("at least one normalization mode is required");
    if (simplified_order < 0 || simplified_order > 2) throw ConfigError("simplified_order must be 0, 1 or 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    test_function.validate();
    (void)phantom();
  }
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline CorrectionSpec correction_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("correction must be an object {a, b}");
  CorrectionSpec c;
  c.a = json_get<int>(j, "a", 1);
  c.b = json_get<int>(j, "b", 0);
  return c;
}

}  // namespace detail

[[nodiscard]] inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  ExperimentConfig cfg;
  if (j.contains("phantom")) cfg.phantom_spec = j["phantom"];
  if (j.contains("grids")) {
    cfg.grids.clear();
    if (!j["grids"].is_array()) throw ConfigError("grids must be an array of [n, m] pairs");
    for (const auto& g : j["grids"]) {
      if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer()) {
        throw ConfigError("grids must be an array of [n, m] integer pairs");
      }
      cfg.grids.emplace_back(g[0].get<int>(), g[1].get<int>());
    }
  }
  if (j.contains("doses")) {
    cfg.doses = detail::json_get<std::vector<std::int64_t>>(j, "doses", {});
  } else if (j.contains("dose_schedule")) {
    cfg.doses.clear();
    const auto& ds = j["dose_schedule"];
    if (ds.is_object() && ds.contains("kappa_prime")) cfg.kappa_prime = detail::json_get<double>(ds, "kappa_prime", 1.0);
  }
  if (j.contains("corrections")) {
    cfg.corrections.clear();
    if (!j["corrections"].is_array()) throw ConfigError("corrections must be an array");
    for (const auto& c : j["corrections"]) cfg.corrections.push_back(detail::correction_from_json(c));
  } else if (j.contains("correction")) {
    cfg.corrections = {detail::correction_from_json(j["correction"])};
  }
  if (j.contains("modes")) {
    cfg.modes.clear();
    for (const auto& name : detail::json_get<std::vector<std::string>>(j, "modes", {})) {
      cfg.modes.push_back(parse_mode(name));
    }
  }
  cfg.simplified_order = detail::json_get<int>(j, "simplified_order", cfg.simplified_order);
  if (j.contains("test_function")) cfg.test_function = test_function_from_json(j["test_function"]);
  const auto reps = detail::json_get<std::int64_t>(j, "replicates", static_cast<std::int64_t>(cfg.replicates));
  if (reps < 1) throw ConfigError("replicates must be >= 1");
  cfg.replicates = static_cast<std::size_t>(reps);
  cfg.seed = detail::json_get<std::uint64_t>(j, "seed", cfg.seed);
  const auto workers = detail::json_get<std::int64_t>(j, "workers", 1);
  if (workers < 1) throw ConfigError("workers must be >= 1");
  cfg.workers = static_cast<unsigned>(workers);
  cfg.sampler = parse_sampler(detail::json_get<std::string>(j, "sampler", "direct"));
  cfg.alpha = detail::json_get<double>(j, "alpha", cfg.alpha);
  cfg.ks_threshold = detail::json_get<double>(j, "ks_threshold", cfg.ks_threshold);
  cfg.be_constant = detail::json_get<double>(j, "be_constant", cfg.be_constant);
  cfg.output = detail::json_get<std::string>(j, "output", cfg.output);
  cfg.validate();
  return cfg;
}

[[nodiscard]] inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json grids = nlohmann::json::array();
  for (const auto& [n, m] : cfg.grids) grids.push_back({n, m});
  nlohmann::json corrections = nlohmann::json::array();
  for (const auto& c : cfg.corrections) corrections.push_back({{"a", c.a}, {"b", c.b}});
  nlohmann::json modes = nlohmann::json::array();
  for (const auto mode : cfg.modes) modes.push_back(std::string(to_string(mode)));
  nlohmann::json j = {{"phantom", cfg.phantom_spec},
                      {"grids", grids},
                      {"doses", cfg.doses},
                      {"corrections", corrections},
                      {"modes", modes},
                      {"simplified_order", cfg.simplified_order},
                      {"test_function",
                       {{"s_lo", cfg.test_function.s_lo},
                        {"s_hi", cfg.test_function.s_hi},
                        {"q", cfg.test_function.q},
                        {"c0", cfg.test_function.c0},
                        {"c1", cfg.test_function.c1},
                        {"c2", cfg.test_function.c2}}},
                      {"replicates", cfg.replicates},
                      {"seed", cfg.seed},
                      {"sampler", std::string(to_string(cfg.sampler))},
                      {"alpha", cfg.alpha},
                      {"ks_threshold", cfg.ks_threshold},
                      {"be_constant", cfg.be_constant},
                      {"output", cfg.output}};
  if (cfg.kappa_prime) j["dose_schedule"] = {{"kappa_prime", *cfg.kappa_prime}};
  return j;
}

struct ExperimentResult {
  std::string experiment;
  Table table;
  nlohmann::json manifest;
};

/// Least-squares slope of log(y) against log(x), all points equally weighted.
[[nodiscard]] inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = pairwise_sum(lx) / static_cast<double>(lx.size());
  const double my = pairwise_sum(ly) / static_cast<double>(ly.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

namespace detail {

struct GridSetup {
  Grid grid;
  StepField xfield;
  CellMasses masses;
};

inline GridSetup setup_grid(const Phantom& phantom, const TestFunction& g, int n, int m) {
  Grid grid = make_grid(n, m);
  StepField x = discretize_transform(phantom, grid);
  CellMasses masses = cell_masses(g, grid);
  return {grid, std::move(x), std::move(masses)};
}

inline nlohmann::json base_manifest(const std::string& name, const ExperimentConfig& cfg,
                                    std::chrono::steady_clock::time_point start) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {{"experiment", name},
          {"version", kVersion},
          {"config", to_json(cfg)},
          {"seed", cfg.seed},
          {"workers", cfg.workers},
          {"wall_time_seconds", wall}};
}

inline std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

/// Pairing of <field, g> for the -log((.)/N) field minus X, scaled to Z.
inline double pair_scaled(const StepField& y, const StepField& x, const StepField& corr, const CellMasses& g,
                          double scale) {
  double acc = 0.0;
  for (std::size_t c = 0; c < y.values.size(); ++c) {
    acc += (y.values[c] - x.values[c] - corr.values[c]) * g.values[c];
  }
  return scale * acc;
}

}  // namespace detail

/// E||Y - X_{n,m} f||_2 against N, per normalization mode, with a fitted log-log slope.
[[nodiscard]] inline ExperimentResult run_lln(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const Phantom phantom = cfg.phantom();
  Table table;
  table.columns = {"experiment", "mode",     "phantom", "n",     "m",     "N",
                   "replicates", "seed",     "mean_l2_error", "se_l2_error", "slope", "slope_points"};

  for (const auto& [n, m] : cfg.grids) {
    const auto doses = cfg.doses_for(n, m);
    if (doses.size() < 3) throw ConfigError("lln: the dose schedule needs at least 3 values");
    const auto [lo, hi] = std::minmax_element(doses.begin(), doses.end());
    if (static_cast<double>(*hi) < 100.0 * static_cast<double>(*lo)) {
      throw ConfigError("lln: the dose schedule must span at least two decades");
    }
  }

  struct Row {
    NormalizationMode mode;
    int n, m;
    std::int64_t N;
    SampleSummary summary;
  };
  std::vector<Row> rows;
  for (const auto& [n, m] : cfg.grids) {
    const Grid grid = make_grid(n, m);
    const StepField x = discretize_transform(phantom, grid);
    for (const auto N : cfg.doses_for(n, m)) {
      const auto norms = parallel_map<std::vector<double>>(cfg.replicates, cfg.workers, [&](std::size_t r) {
        const KeyedRng rng(cfg.seed, r);
        const CountField counts = simulate_counts(x, N, rng, cfg.sampler);
        std::vector<double> out;
        out.reserve(cfg.modes.size());
        for (const auto mode : cfg.modes) {
          StepField diff = observe(counts, mode, rng);
          for (std::size_t c = 0; c < diff.values.size(); ++c) diff.values[c] -= x.values[c];
          out.push_back(l2_norm(diff));
        }
        return out;
      });
      for (std::size_t k = 0; k < cfg.modes.size(); ++k) {
        std::vector<double> xs(norms.size());
        for (std::size_t r = 0; r < norms.size(); ++r) xs[r] = norms[r][k];
        rows.push_back({cfg.modes[k], n, m, N, summarize(xs)});
      }
    }
  }

  for (const auto mode : cfg.modes) {
    for (const auto& [n, m] : cfg.grids) {
      std::vector<double> doses, means;
      for (const auto& row : rows) {
        if (row.mode == mode && row.n == n && row.m == m) {
          doses.push_back(static_cast<double>(row.N));
          means.push_back(row.summary.mean);
        }
      }
      const double slope = loglog_slope(doses, means);
      for (const auto& row : rows) {
        if (row.mode != mode || row.n != n || row.m != m) continue;
        table.rows.push_back({std::string("lln"), std::string(to_string(mode)), phantom.id, std::int64_t{n},
                              std::int64_t{m}, row.N, detail::as_int(cfg.replicates),
                              static_cast<std::int64_t>(cfg.seed), row.summary.mean, row.summary.standard_error,
                              slope, detail::as_int(doses.size())});
      }
    }
  }
  ExperimentResult res{"lln", std::move(table), {}};
  res.manifest = detail::base_manifest("lln", cfg, start);
  return res;
}

/// Samples <Z, g> per normalization mode and correction; compares with N(0, asymptotic variance).
[[nodiscard]] inline ExperimentResult run_clt(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const Phantom phantom = cfg.phantom();
  const double asym = asymptotic_variance(phantom, cfg.test_function);
  Table table;
  table.columns = {"experiment", "mode",       "n",          "m",           "N",
                   "a",          "b",          "kappa",      "nm_over_N_kappa", "replicates",
                   "seed",       "mean",       "se_mean",    "mean_over_se", "predicted_mean",
                   "bias_oracle", "sample_variance", "sigma2", "asymptotic_variance", "ks",
                   "dkw_margin", "ks_threshold", "ks_pass"};

  for (const auto& [n, m] : cfg.grids) {
    const auto setup = detail::setup_grid(phantom, cfg.test_function, n, m);
    for (const auto N : cfg.doses_for(n, m)) {
      const double scale = std::sqrt(static_cast<double>(setup.grid.cells()) * static_cast<double>(N));
      // One correction field per (mode, spec); all share each replicate's counts.
      std::vector<std::pair<NormalizationMode, CorrectionSpec>> combos;
      std::vector<StepField> corrections;
      for (const auto mode : cfg.modes) {
        for (auto spec : cfg.corrections) {
          spec.mode = mode;
          combos.emplace_back(mode, spec);
          corrections.push_back(correction_field(setup.xfield, N, spec));
        }
      }
      const auto samples = parallel_map<std::vector<double>>(cfg.replicates, cfg.workers, [&](std::size_t r) {
        const KeyedRng rng(cfg.seed, r);
        const CountField counts = simulate_counts(setup.xfield, N, rng, cfg.sampler);
        std::vector<double> out;
        out.reserve(combos.size());
        for (std::size_t k = 0; k < cfg.modes.size(); ++k) {
          const StepField y = observe(counts, cfg.modes[k], rng);
          for (std::size_t s = 0; s < cfg.corrections.size(); ++s) {
            const std::size_t idx = k * cfg.corrections.size() + s;
            out.push_back(detail::pair_scaled(y, setup.xfield, corrections[idx], setup.masses, scale));
          }
        }
        return out;
      });
      const double sigma2 = sigma_squared(setup.xfield, N, setup.masses);
      for (std::size_t idx = 0; idx < combos.size(); ++idx) {
        const auto& [mode, spec] = combos[idx];
        std::vector<double> xs(samples.size());
        for (std::size_t r = 0; r < samples.size(); ++r) xs[r] = samples[r][idx];
        const auto summary = summarize(xs);
        const double ks = asym > 0.0 ? ks_normal(xs, asym) : std::nan("");
        const double margin = dkw_margin(xs.size(), cfg.alpha);
        // Predicted mean: second-order bias of Y - X minus the applied correction.
        StepField residual = simplified_correction(setup.xfield, N, mode, 2);
        for (std::size_t c = 0; c < residual.values.size(); ++c) residual.values[c] -= corrections[idx].values[c];
        const double predicted = scale * pair(residual, setup.masses);
        const double oracle = scale * pair(simplified_correction(setup.xfield, N, mode, 1), setup.masses);
        const double nm_ratio =
            static_cast<double>(setup.grid.cells()) / std::pow(static_cast<double>(N), spec.kappa());
        table.rows.push_back({std::string("clt"), std::string(to_string(mode)), std::int64_t{n}, std::int64_t{m}, N,
                              std::int64_t{spec.a}, std::int64_t{spec.b}, std::int64_t{spec.kappa()}, nm_ratio,
                              detail::as_int(cfg.replicates), static_cast<std::int64_t>(cfg.seed), summary.mean,
                              summary.standard_error, summary.mean / summary.standard_error, predicted, oracle,
                              summary.variance, sigma2, asym, ks, margin, cfg.ks_threshold,
                              std::int64_t{ks < cfg.ks_threshold ? 1 : 0}});
      }
    }
  }
  ExperimentResult res{"clt", std::move(table), {}};
  res.manifest = detail::base_manifest("clt", cfg, start);
  res.manifest["asymptotic_variance"] = asym;
  return res;
}

/// Empirical KS distance of sigma^{-1} <W, g> to Phi against 0.5583 L plus the DKW margin.
[[nodiscard]] inline ExperimentResult run_be(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const Phantom phantom = cfg.phantom();
  const double asym = asymptotic_variance(phantom, cfg.test_function);
  Table table;
  table.columns = {"experiment", "n",          "m",         "N",         "replicates",       "seed",
                   "sigma2",     "sample_variance", "L",    "L_sqrt_nm", "raw_bound",        "composite_bound",
                   "composite_constant", "kappa", "ks",     "dkw_margin", "ks_limit",        "pass",
                   "asymptotic_variance"};
  const CorrectionSpec spec = cfg.corrections.front();
  for (const auto& [n, m] : cfg.grids) {
    const auto setup = detail::setup_grid(phantom, cfg.test_function, n, m);
    for (const auto N : cfg.doses_for(n, m)) {
      const BerryEsseenReport report = be_bounds(setup.xfield, N, setup.masses, spec, asym, cfg.be_constant);
      const double sigma = std::sqrt(report.sigma2);
      const auto samples = parallel_map<double>(cfg.replicates, cfg.workers, [&](std::size_t r) {
        const KeyedRng rng(cfg.seed, r);
        const CountField counts = simulate_counts(setup.xfield, N, rng, cfg.sampler);
        return pair(w_field(counts), setup.masses) / sigma;
      });
      const auto summary = summarize(samples);
      const double ks = ks_statistic(samples, normal_cdf);
      const double margin = dkw_margin(samples.size(), cfg.alpha);
      const double limit = report.raw_bound + margin;
      table.rows.push_back({std::string("be"), std::int64_t{n}, std::int64_t{m}, N, detail::as_int(cfg.replicates),
                            static_cast<std::int64_t>(cfg.seed), report.sigma2, summary.variance * report.sigma2,
                            report.L, report.L * std::sqrt(static_cast<double>(n) * m), report.raw_bound,
                            report.composite_bound, report.constant, std::int64_t{report.kappa}, ks, margin, limit,
                            std::int64_t{ks <= limit ? 1 : 0}, asym});
    }
  }
  ExperimentResult res{"be", std::move(table), {}};
  res.manifest = detail::base_manifest("be", cfg, start);
  return res;
}

/// |sigma^2_{n,m,N} - asymptotic variance| across grids and doses (no Monte Carlo).
[[nodiscard]] inline ExperimentResult run_variance_convergence(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  if (cfg.grids.size() < 3 && cfg.doses.size() < 3) {
    throw ConfigError("variance: needs at least 3 grid sizes (or 3 doses)");
  }
  const Phantom phantom = cfg.phantom();
  const double asym = asymptotic_variance(phantom, cfg.test_function);
  Table table;
  table.columns = {"experiment", "n", "m", "N", "sigma2", "asymptotic_variance", "abs_error",
                   "ratio_vs_previous_grid", "ratio_vs_previous_dose"};
  // previous error keyed by dose (for grid doubling) and by grid (for dose sweeps)
  std::vector<std::pair<std::int64_t, double>> last_by_dose;
  for (const auto& [n, m] : cfg.grids) {
    const auto setup = detail::setup_grid(phantom, cfg.test_function, n, m);
    double last_in_grid = std::nan("");
    for (const auto N : cfg.doses_for(n, m)) {
      const double s2 = sigma_squared(setup.xfield, N, setup.masses);
      const double err = std::abs(s2 - asym);
      double grid_ratio = std::nan("");
      bool found = false;
      for (auto& [dose, prev] : last_by_dose) {
        if (dose == N) {
          grid_ratio = prev > 0.0 ? err / prev : std::nan("");
          prev = err;
          found = true;
        }
      }
      if (!found) last_by_dose.emplace_back(N, err);
      const double dose_ratio = last_in_grid > 0.0 ? err / last_in_grid : std::nan("");
      last_in_grid = err;
      table.rows.push_back({std::string("variance"), std::int64_t{n}, std::int64_t{m}, N, s2, asym, err, grid_ratio,
                            dose_ratio});
    }
  }
  ExperimentResult res{"variance", std::move(table), {}};
  res.manifest = detail::base_manifest("variance", cfg, start);
  return res;
}

/// CLT under every normalization with the mode-matched simplified correction,
/// plus the same statistic with the other family's signs applied.
[[nodiscard]] inline ExperimentResult run_mode_comparison(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const Phantom phantom = cfg.phantom();
  const double asym = asymptotic_variance(phantom, cfg.test_function);
  Table table;
  table.columns = {"experiment",     "mode",        "n",          "m",         "N",
                   "simplified_order", "replicates", "seed",       "mean",      "se_mean",
                   "ks",             "dkw_margin",  "ks_threshold", "ks_pass", "flipped_mean",
                   "flipped_se",     "flipped_ratio", "zero_count_rate", "zero_count_bound", "differing_cell_rate"};
  for (const auto& [n, m] : cfg.grids) {
    const auto setup = detail::setup_grid(phantom, cfg.test_function, n, m);
    for (const auto N : cfg.doses_for(n, m)) {
      const double scale = std::sqrt(static_cast<double>(setup.grid.cells()) * static_cast<double>(N));
      std::vector<StepField> matched, flipped;
      for (const auto mode : cfg.modes) {
        const auto other = mode == NormalizationMode::AddOne ? NormalizationMode::MaxOne : NormalizationMode::AddOne;
        matched.push_back(simplified_correction(setup.xfield, N, mode, cfg.simplified_order));
        flipped.push_back(simplified_correction(setup.xfield, N, other, cfg.simplified_order));
      }
      struct Rep {
        std::vector<double> matched, flipped;
        double zero_cells = 0.0;
        double differing_cells = 0.0;
      };
      const auto reps = parallel_map<Rep>(cfg.replicates, cfg.workers, [&](std::size_t r) {
        const KeyedRng rng(cfg.seed, r);
        const CountField counts = simulate_counts(setup.xfield, N, rng, cfg.sampler);
        Rep rep;
        for (std::size_t k = 0; k < cfg.modes.size(); ++k) {
          const StepField y = observe(counts, cfg.modes[k], rng);
          rep.matched.push_back(detail::pair_scaled(y, setup.xfield, matched[k], setup.masses, scale));
          rep.flipped.push_back(detail::pair_scaled(y, setup.xfield, flipped[k], setup.masses, scale));
        }
        const StepField ymax = observe(counts, NormalizationMode::MaxOne, rng);
        const StepField yres = observe(counts, NormalizationMode::Resample, rng);
        for (std::size_t c = 0; c < counts.counts.size(); ++c) {
          if (counts.counts[c] == 0) rep.zero_cells += 1.0;
          if (ymax.values[c] != yres.values[c]) rep.differing_cells += 1.0;
        }
        return rep;
      });
      double min_p = 1.0;
      for (const double x : setup.xfield.values) min_p = std::min(min_p, std::exp(-x));
      const double zero_bound = std::exp(-static_cast<double>(N) * min_p);
      std::vector<double> zeros(reps.size()), differing(reps.size());
      for (std::size_t r = 0; r < reps.size(); ++r) {
        zeros[r] = reps[r].zero_cells;
        differing[r] = reps[r].differing_cells;
      }
      const double denom = static_cast<double>(reps.size()) * static_cast<double>(setup.grid.cells());
      const double zero_rate = pairwise_sum(zeros) / denom;
      const double diff_rate = pairwise_sum(differing) / denom;
      for (std::size_t k = 0; k < cfg.modes.size(); ++k) {
        std::vector<double> xs(reps.size()), fs(reps.size());
        for (std::size_t r = 0; r < reps.size(); ++r) {
          xs[r] = reps[r].matched[k];
          fs[r] = reps[r].flipped[k];
        }
        const auto sm = summarize(xs);
        const auto sf = summarize(fs);
        const double ks = asym > 0.0 ? ks_normal(xs, asym) : std::nan("");
        table.rows.push_back({std::string("modes"), std::string(to_string(cfg.modes[k])), std::int64_t{n},
                              std::int64_t{m}, N, std::int64_t{cfg.simplified_order}, detail::as_int(cfg.replicates),
                              static_cast<std::int64_t>(cfg.seed), sm.mean, sm.standard_error, ks,
                              dkw_margin(xs.size(), cfg.alpha), cfg.ks_threshold,
                              std::int64_t{ks < cfg.ks_threshold ? 1 : 0}, sf.mean, sf.standard_error,
                              std::abs(sf.mean) / std::abs(sm.mean), zero_rate, zero_bound, diff_rate});
      }
    }
  }
  ExperimentResult res{"modes", std::move(table), {}};
  res.manifest = detail::base_manifest("modes", cfg, start);
  return res;
}

/// Writes <dir>/<name>.csv and <dir>/<name>.manifest.json, both or neither.
inline void write_result(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  OutputBatch batch;
  batch.add(dir / (result.experiment + ".csv"), to_csv(result.table));
  batch.add(dir / (result.experiment + ".manifest.json"), result.manifest.dump(2) + "\n");
  batch.commit();
}

}  // namespace ctnoise
