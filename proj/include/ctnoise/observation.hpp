#pragma once

/**
 * @file observation.hpp
 * @brief Photon-count simulation over the grid and the observed sinogram Y.
 *
 * Each cell (i, l) draws S ~ Pois(N p) with p = exp(-X_{n,m} f) from its own
 * keyed stream, so a count field is a pure function of (seed, replicate).
 * Zero counts are handled by one of three normalizations:
 *
 *   AddOne    Y = -log((S + 1) / N)
 *   MaxOne    Y = -log(max(S, 1) / N)
 *   Resample  Y = -log(S~ / N), S~ = S when S > 0, otherwise a fresh draw
 *             conditioned to be positive (so S~ and S agree whenever S > 0).
 */

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctnoise/discretization.hpp"
#include "ctnoise/errors.hpp"
#include "ctnoise/poisson.hpp"
#include "ctnoise/rng.hpp"

namespace ctnoise {

enum class NormalizationMode { AddOne, MaxOne, Resample };

[[nodiscard]] inline std::string_view to_string(NormalizationMode mode) noexcept {
  switch (mode) {
    case NormalizationMode::AddOne: return "add_one";
    case NormalizationMode::MaxOne: return "max_one";
    case NormalizationMode::Resample: return "resample";
  }
  return "?";
}

[[nodiscard]] inline NormalizationMode parse_mode(std::string_view text) {
  if (text == "add_one") return NormalizationMode::AddOne;
  if (text == "max_one") return NormalizationMode::MaxOne;
  if (text == "resample") return NormalizationMode::Resample;
  throw ConfigError("unknown normalization mode '" + std::string(text) + "'");
}

inline constexpr NormalizationMode kAllModes[] = {NormalizationMode::AddOne, NormalizationMode::MaxOne,
                                                  NormalizationMode::Resample};

enum class Sampler { Direct, Thinned };

[[nodiscard]] inline std::string_view to_string(Sampler s) noexcept {
  return s == Sampler::Direct ? "direct" : "thinned";
}

[[nodiscard]] inline Sampler parse_sampler(std::string_view text) {
  if (text == "direct") return Sampler::Direct;
  if (text == "thinned") return Sampler::Thinned;
  throw ConfigError("unknown sampler '" + std::string(text) + "'");
}

struct CountField {
  Grid grid;
  std::int64_t N = 1;
  std::vector<std::int64_t> counts;
  std::vector<double> p;

  [[nodiscard]] std::int64_t count(std::size_t i, std::size_t l) const { return counts[grid.index(i, l)]; }
  [[nodiscard]] double survival(std::size_t i, std::size_t l) const { return p[grid.index(i, l)]; }
};

/// Survival probabilities p = exp(-X_{n,m} f), cellwise.
[[nodiscard]] inline std::vector<double> survival_probabilities(const StepField& xfield) {
  std::vector<double> p(xfield.values.size());
  for (std::size_t c = 0; c < p.size(); ++c) p[c] = std::exp(-xfield.values[c]);
  return p;
}

[[nodiscard]] inline CountField simulate_counts(const StepField& xfield, std::int64_t N, const KeyedRng& rng,
                                                Sampler sampler = Sampler::Direct) {
  if (N < 1) throw std::invalid_argument("simulate_counts: N must be >= 1");
  const Grid& grid = xfield.grid;
  CountField out{grid, N, std::vector<std::int64_t>(grid.cells(), 0), survival_probabilities(xfield)};
  const auto Nd = static_cast<double>(N);
  for (std::size_t i = 0; i < static_cast<std::size_t>(grid.n()); ++i) {
    for (std::size_t l = 0; l < static_cast<std::size_t>(grid.m()); ++l) {
      const std::size_t c = grid.index(i, l);
      Engine eng = rng.cell(i, l);
      out.counts[c] = sampler == Sampler::Direct ? sample_direct(Nd * out.p[c], eng).value
                                                 : sample_thinned(N, out.p[c], eng).value;
    }
  }
  return out;
}

/// Pois(lambda) conditioned on being positive.
[[nodiscard]] inline std::int64_t conditioned_positive_sample(double lambda, Engine& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("conditioned_positive_sample: lambda must be positive and finite");
  }
  if (lambda < 1e-8) {
    // Inverse CDF of the conditioned law; rejection would loop ~1/lambda times.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double pk = lambda * std::exp(-lambda) / -std::expm1(-lambda);
    double cdf = pk;
    std::int64_t k = 1;
    while (u > cdf && pk > 0.0) {
      pk *= lambda / static_cast<double>(k + 1);
      cdf += pk;
      ++k;
    }
    return k;
  }
  std::poisson_distribution<std::int64_t> dist(lambda);
  for (;;) {
    const std::int64_t s = dist(rng);
    if (s > 0) return s;
  }
}

/// The normalized count whose -log(./N) is the observation, before any resampling.
[[nodiscard]] inline double normalized_count(std::int64_t s, NormalizationMode mode) noexcept {
  switch (mode) {
    case NormalizationMode::AddOne: return static_cast<double>(s) + 1.0;
    case NormalizationMode::MaxOne:
    case NormalizationMode::Resample: return static_cast<double>(s > 0 ? s : 1);
  }
  return 0.0;
}

/// Observation step field Y for the chosen normalization. `rng` is consulted
/// only for Resample, on zero-count cells.
[[nodiscard]] inline StepField observe(const CountField& counts, NormalizationMode mode, const KeyedRng& rng) {
  const Grid& grid = counts.grid;
  StepField y(grid);
  const auto Nd = static_cast<double>(counts.N);
  const double logN = std::log(Nd);
  for (std::size_t i = 0; i < static_cast<std::size_t>(grid.n()); ++i) {
    for (std::size_t l = 0; l < static_cast<std::size_t>(grid.m()); ++l) {
      const std::size_t c = grid.index(i, l);
      const std::int64_t s = counts.counts[c];
      double v = normalized_count(s, mode);
      if (mode == NormalizationMode::Resample && s == 0) {
        Engine eng = rng.cell(i, l, StreamPurpose::Resample);
        v = static_cast<double>(conditioned_positive_sample(Nd * counts.p[c], eng));
      }
      y.values[c] = logN - std::log(v);
    }
  }
  return y;
}

}  // namespace ctnoise
