#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ctnoise/io.hpp"
#include "ctnoise/reduce.hpp"
#include "ctnoise/rng.hpp"

using namespace ctnoise;
namespace fs = std::filesystem;

TEST(PairwiseSum, ExactOnIntegersAndStableOrder) {
  std::vector<double> xs(1001);
  std::iota(xs.begin(), xs.end(), 1.0);
  EXPECT_EQ(pairwise_sum(xs), 1001.0 * 1002.0 / 2.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
  // Better than naive accumulation on an ill-conditioned sum.
  std::vector<double> ys(1 << 20, 0.1);
  EXPECT_NEAR(pairwise_sum(ys), 0.1 * (1 << 20), 1e-8);
}

TEST(Summarize, Moments) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto s = summarize(xs);
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.standard_error, std::sqrt(5.0 / 12.0));
  const auto one = summarize(std::vector<double>{7.0});
  EXPECT_EQ(one.mean, 7.0);
  EXPECT_TRUE(std::isnan(one.variance));
  EXPECT_TRUE(std::isnan(one.standard_error));
}

TEST(ParallelMap, SameResultForAnyWorkerCount) {
  const auto fn = [](std::size_t i) {
    Engine e(hash_key({9, i}));
    return std::uniform_real_distribution<double>(0.0, 1.0)(e);
  };
  const auto one = parallel_map<double>(5000, 1, fn);
  for (unsigned w : {2u, 3u, 8u}) {
    const auto many = parallel_map<double>(5000, w, fn);
    EXPECT_EQ(one, many);
    EXPECT_EQ(pairwise_sum(one), pairwise_sum(many));
  }
  EXPECT_TRUE(parallel_map<int>(0, 4, [](std::size_t) { return 1; }).empty());
}

TEST(ParallelMap, PropagatesExceptions) {
  const auto fn = [](std::size_t i) -> int {
    if (i == 17) throw std::runtime_error("boom");
    return static_cast<int>(i);
  };
  EXPECT_THROW((void)parallel_map<int>(100, 4, fn), std::runtime_error);
  EXPECT_THROW((void)parallel_map<int>(100, 1, fn), std::runtime_error);
}

TEST(Rng, KeyedStreamsDifferAndRepeat) {
  const KeyedRng r(1, 2);
  auto a = r.cell(3, 4);
  auto b = r.cell(3, 4);
  auto c = r.cell(4, 3);
  auto d = r.cell(3, 4, StreamPurpose::Resample);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
  EXPECT_NE(hash_key({1, 2}), hash_key({2, 1}));
  EXPECT_NE(KeyedRng(1, 2).stream()(), KeyedRng(1, 3).stream()());
}

TEST(Rng, UniformOutputMoments) {
  Engine e(12345);
  const int n = 1'000'000;
  double sum = 0.0;
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    const auto v = e();
    sum += static_cast<double>(v >> 11) * 0x1.0p-53;
    ones += __builtin_popcountll(v);
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(static_cast<double>(ones) / n, 32.0, 4.0 * std::sqrt(16.0 / n));
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(-1.5e-300), "-1.5000000000000001e-300");
  EXPECT_EQ(format_number(std::nan("")), "");
  EXPECT_EQ(format_number(INFINITY), "inf");
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308}) {
    EXPECT_EQ(std::stod(format_number(x)), x);
  }
}

TEST(Csv, EscapingAndTables) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  Table t;
  t.columns = {"name", "n", "x", "missing"};
  t.rows.push_back({std::string("parabola(a=1,b=2)"), std::int64_t{16}, 0.25, std::monostate{}});
  EXPECT_EQ(to_csv(t), "name,n,x,missing\r\n\"parabola(a=1,b=2)\",16,0.25,\r\n");
  EXPECT_EQ(t.number(0, "n"), 16.0);
  EXPECT_EQ(t.number(0, "x"), 0.25);
  EXPECT_TRUE(std::isnan(t.number(0, "missing")));
  EXPECT_EQ(t.text(0, "name"), "\"parabola(a=1,b=2)\"");
  EXPECT_THROW((void)t.column("nope"), std::out_of_range);
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ctnoise_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(TempDir, AtomicWriteAndRead) {
  atomic_write(dir_ / "a.txt", "hello\n");
  EXPECT_EQ(read_file(dir_ / "a.txt"), "hello\n");
  atomic_write(dir_ / "a.txt", "again");
  EXPECT_EQ(read_file(dir_ / "a.txt"), "again");
  EXPECT_FALSE(fs::exists(dir_ / "a.txt.tmp"));
  EXPECT_THROW((void)read_file(dir_ / "missing.txt"), IoError);
  EXPECT_THROW(atomic_write(dir_ / "no" / "such" / "dir.txt", "x"), IoError);
}

TEST_F(TempDir, BatchIsAllOrNothing) {
  OutputBatch ok;
  ok.add(dir_ / "one.csv", "1");
  ok.add(dir_ / "two.csv", "2");
  ok.commit();
  EXPECT_EQ(read_file(dir_ / "one.csv"), "1");
  EXPECT_EQ(read_file(dir_ / "two.csv"), "2");

  OutputBatch bad;
  bad.add(dir_ / "three.csv", "3");
  bad.add(dir_ / "missing_dir" / "four.csv", "4");
  EXPECT_THROW(bad.commit(), IoError);
  EXPECT_FALSE(fs::exists(dir_ / "three.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "three.csv.tmp"));
}
