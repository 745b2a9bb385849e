#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ctnoise/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("ctnoise_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult run(const std::string& args) const {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd =
        std::string(CTNOISE_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = ctnoise::read_file(out);
    r.err = ctnoise::read_file(err);
    return r;
  }

  fs::path write_config(const std::string& name, const std::string& text) const {
    const auto path = dir_ / name;
    std::ofstream(path) << text;
    return path;
  }

  static std::string config(const std::string& name) { return std::string(CTNOISE_CONFIG_DIR) + "/" + name; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PhantomCatalog) {
  const auto r = run("phantom");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("id,kind,inf_bound,sup_bound,lipschitz_bound,closed_form"), std::string::npos);
  EXPECT_NE(r.out.find("bump"), std::string::npos);
  EXPECT_NE(r.out.find(",no"), std::string::npos);
  EXPECT_NE(r.out.find(",yes"), std::string::npos);
}

TEST_F(Cli, LlnWithShippedConfig) {
  const auto out = dir_ / "lln";
  const auto r = run("lln --config " + config("lln.json") + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = ctnoise::read_file(out / "lln.csv");
  const auto manifest = nlohmann::json::parse(ctnoise::read_file(out / "lln.manifest.json"));
  EXPECT_EQ(manifest["experiment"], "lln");
  // Parse the slope column of every row.
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  std::size_t slope_col = 0;
  {
    std::istringstream h(header);
    std::string name;
    for (std::size_t i = 0; std::getline(h, name, ','); ++i) {
      if (name == "slope") slope_col = i;
    }
  }
  ASSERT_GT(slope_col, 0u);
  int rows = 0;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty() || line == "\r") continue;
    // The phantom id is quoted and contains commas; count from the end instead.
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (const char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) fields.push_back(std::exchange(field, {}));
      else if (c != '\r') field += c;
    }
    fields.push_back(field);
    const double slope = std::stod(fields.at(slope_col));
    EXPECT_GE(slope, -0.6);
    EXPECT_LE(slope, -0.4);
    ++rows;
  }
  EXPECT_EQ(rows, 12);
}

TEST_F(Cli, MissingConfigIsIoErrorWithoutOutputs) {
  const auto out = dir_ / "never";
  const auto r = run("lln --config " + (dir_ / "nope.json").string() + " --out " + out.string());
  EXPECT_EQ(r.code, 4);
  const auto err = nlohmann::json::parse(r.err);
  EXPECT_EQ(err["exit_code"], 4);
  EXPECT_EQ(err["error"], "io");
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, InvalidConfigIsExitTwo) {
  const auto bad = write_config("bad.json", R"({"grids": [[0, 8]]})");
  auto r = run("clt --config " + bad.string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "config");
  EXPECT_FALSE(fs::exists(dir_ / "o"));

  const auto garbage = write_config("garbage.json", "{not json");
  r = run("clt --config " + garbage.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1) << "one-line error";

  r = run("frobnicate");
  EXPECT_EQ(r.code, 2);
  r = run("lln");
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, DegenerateVarianceIsNumericalFailure) {
  const auto cfg = write_config("zero.json", R"({"grids": [[8, 8]], "doses": [100], "replicates": 10,
                                               "test_function": {"c0": 0, "c1": 0, "c2": 0}})");
  const auto r = run("be --config " + cfg.string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "numerical");
  EXPECT_FALSE(fs::exists(dir_ / "o" / "be.csv"));
}

TEST_F(Cli, SeedAndWorkerOverrides) {
  const auto cfg = write_config("small.json", R"({"grids": [[8, 8]], "doses": [100, 1000, 10000],
                                                "modes": ["add_one", "resample"], "replicates": 40, "seed": 3})");
  const auto csv = [&](const std::string& extra, const std::string& sub) {
    const auto out = dir_ / sub;
    const auto r = run("lln --config " + cfg.string() + " --out " + out.string() + " " + extra);
    EXPECT_EQ(r.code, 0) << r.err;
    return ctnoise::read_file(out / "lln.csv");
  };
  const auto base = csv("", "a");
  EXPECT_EQ(base, csv("", "b"));
  EXPECT_EQ(base, csv("--workers 4", "c"));
  EXPECT_EQ(base, csv("--seed 3", "d"));
  EXPECT_NE(base, csv("--seed 4", "e"));
  EXPECT_EQ(run("lln --config " + cfg.string() + " --workers 0").code, 2);
}

TEST_F(Cli, SinogramAndSimulateExports) {
  const auto cfg = write_config("sino.json", R"({"phantom": {"kind": "constant", "c": 1.0},
                                               "grids": [[2, 3]], "doses": [100], "seed": 11})");
  auto r = run("sinogram --config " + cfg.string() + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto x = ctnoise::read_file(dir_ / "sinogram_x.csv");
  EXPECT_EQ(x, "1.4142135623730951,1.4142135623730951,1.4142135623730951\r\n0,0,0\r\n");
  const auto counts = ctnoise::read_file(dir_ / "sinogram_counts.csv");
  EXPECT_EQ(std::count(counts.begin(), counts.end(), '\n'), 2);
  const auto meta = nlohmann::json::parse(ctnoise::read_file(dir_ / "sinogram.json"));
  EXPECT_EQ(meta["n"], 2);
  EXPECT_EQ(meta["N"], 100);
  EXPECT_EQ(meta["seed"], 11);

  r = run("simulate --config " + cfg.string() + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ctnoise::read_file(dir_ / "simulate_counts.csv"), counts);
  for (const char* mode : {"add_one", "max_one", "resample"}) {
    EXPECT_TRUE(fs::exists(dir_ / (std::string("simulate_") + mode + ".csv"))) << mode;
  }
  const auto sim = nlohmann::json::parse(ctnoise::read_file(dir_ / "simulate.json"));
  EXPECT_EQ(sim["modes"].size(), 3u);
}

TEST_F(Cli, VarianceAndModesRun) {
  auto r = run("variance --config " + config("variance.json") + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "variance.csv"));
  const auto cfg = write_config("modes.json", R"({"grids": [[8, 8]], "doses": [100],
                                                "modes": ["add_one", "max_one", "resample"], "replicates": 50})");
  r = run("modes --config " + cfg.string() + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "modes.manifest.json"));
}
