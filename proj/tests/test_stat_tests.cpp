#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ctnoise/poisson.hpp"
#include "ctnoise/stat_tests.hpp"

using namespace ctnoise;

TEST(NormalCdf, Values) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_cdf(-1.0), 0.15865525393145707, 1e-15);
}

TEST(Ks, KnownSmallSample) {
  // Samples 0.1, 0.4, 0.7 against U(0, 1): D = max(1/3 - 0.1, 2/3 - 0.4, 1 - 0.7, 0.1, 0.4 - 1/3, 0.7 - 2/3) = 0.3.
  const std::vector<double> xs{0.7, 0.1, 0.4};
  EXPECT_NEAR(ks_statistic(xs, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.3, 1e-15);
  EXPECT_THROW((void)ks_statistic(std::vector<double>{}, normal_cdf), std::invalid_argument);
  EXPECT_THROW((void)ks_normal(xs, 0.0), std::invalid_argument);
}

TEST(Ks, NormalSamplesWithinDkwBand) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = nd(rng);
  EXPECT_LT(ks_normal(xs, 9.0), dkw_margin(xs.size(), 0.01));
  // The wrong variance is detected.
  EXPECT_GT(ks_normal(xs, 4.0), dkw_margin(xs.size(), 0.01));
}

TEST(Dkw, Formula) {
  EXPECT_NEAR(dkw_margin(10000, 0.01), std::sqrt(std::log(200.0) / 20000.0), 1e-16);
  EXPECT_NEAR(dkw_margin(2000, 0.01), 0.0363948, 1e-6);
  EXPECT_THROW((void)dkw_margin(0), std::invalid_argument);
  EXPECT_THROW((void)dkw_margin(10, 1.0), std::invalid_argument);
}

TEST(ChiSquare, SurvivalFunction) {
  EXPECT_NEAR(chi_square_survival(3.841458820694124, 1), 0.05, 1e-12);
  EXPECT_NEAR(chi_square_survival(18.307038053275146, 10), 0.05, 1e-12);
  EXPECT_EQ(chi_square_survival(5.0, 0), 1.0);
}

TEST(ChiSquare, TwoSampleDetectsShift) {
  std::mt19937_64 rng(8);
  std::poisson_distribution<std::int64_t> a(10.0), b(10.6);
  std::vector<std::int64_t> xa(50000), xb(50000), xc(50000);
  for (auto& x : xa) x = a(rng);
  for (auto& x : xb) x = b(rng);
  for (auto& x : xc) x = a(rng);
  EXPECT_LT(chi_square_two_sample(xa, xb).p_value, 1e-6);
  const auto same = chi_square_two_sample(xa, xc);
  EXPECT_GT(same.p_value, 0.001);
  EXPECT_GT(same.dof, 10);
}

TEST(ChiSquare, TwoSampleUnequalSizes) {
  std::mt19937_64 rng(9);
  std::poisson_distribution<std::int64_t> a(4.0);
  std::vector<std::int64_t> xa(30000), xb(7000);
  for (auto& x : xa) x = a(rng);
  for (auto& x : xb) x = a(rng);
  EXPECT_GT(chi_square_two_sample(xa, xb).p_value, 0.001);
}

TEST(ChiSquare, GoodnessOfFit) {
  std::mt19937_64 rng(10);
  std::poisson_distribution<std::int64_t> d(6.0);
  std::vector<std::int64_t> xs(100000);
  for (auto& x : xs) x = d(rng);
  const auto good = chi_square_gof(xs, [](std::int64_t k) { return poisson_pmf(k, 6.0); }, 0, 40);
  EXPECT_GT(good.p_value, 0.001);
  const auto bad = chi_square_gof(xs, [](std::int64_t k) { return poisson_pmf(k, 6.2); }, 0, 40);
  EXPECT_LT(bad.p_value, 1e-6);
  EXPECT_THROW((void)chi_square_gof(std::vector<std::int64_t>{}, [](std::int64_t) { return 0.0; }, 0, 1),
               std::invalid_argument);
}
