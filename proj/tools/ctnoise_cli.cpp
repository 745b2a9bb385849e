// Batch front end: parse a JSON experiment config, run one subcommand, and
// write plot-ready CSV tables plus a JSON manifest.
//
// Exit codes: 0 ok, 2 invalid config or usage, 3 numerical failure, 4 I/O.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctnoise/ctnoise.hpp"

namespace {

using namespace ctnoise;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
};

int fail(int code, const char* kind, const std::string& message) {
  nlohmann::json line = {{"error", kind}, {"exit_code", code}, {"message", message}};
  std::cerr << line.dump() << '\n';
  return code;
}

ExperimentConfig load_config(const Options& opt) {
  const std::string text = read_file(opt.config_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg = config_from_json(j);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.workers) cfg.workers = *opt.workers;
  if (!opt.out_dir.empty()) cfg.output = opt.out_dir;
  cfg.validate();
  return cfg;
}

void print_catalog(const std::vector<Phantom>& phantoms) {
  std::cout << "id,kind,inf_bound,sup_bound,lipschitz_bound,closed_form\n";
  for (const auto& p : phantoms) {
    std::cout << csv_escape(p.id) << ',' << p.kind << ',' << format_number(p.inf_bound) << ','
              << format_number(p.sup_bound) << ',' << format_number(p.lipschitz_bound) << ','
              << (p.has_closed_form() ? "yes" : "no") << '\n';
  }
}

nlohmann::json sidecar(const ExperimentConfig& cfg, const Phantom& phantom, const Grid& grid, std::int64_t N) {
  nlohmann::json j = {{"grid", grid_metadata(grid)},
                      {"n", grid.n()},
                      {"m", grid.m()},
                      {"N", N},
                      {"seed", cfg.seed},
                      {"replicate", 0},
                      {"sampler", std::string(to_string(cfg.sampler))},
                      {"phantom", phantom.id},
                      {"phantom_spec", cfg.phantom_spec},
                      {"version", kVersion}};
  return j;
}

std::string counts_to_csv(const CountField& counts) {
  std::string out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(counts.grid.n()); ++i) {
    for (std::size_t l = 0; l < static_cast<std::size_t>(counts.grid.m()); ++l) {
      if (l) out += ',';
      out += std::to_string(counts.count(i, l));
    }
    out += "\r\n";
  }
  return out;
}

void run_sinogram(const ExperimentConfig& cfg) {
  const Phantom phantom = cfg.phantom();
  const auto [n, m] = cfg.grids.front();
  const Grid grid = make_grid(n, m);
  const std::int64_t N = cfg.doses_for(n, m).front();
  const StepField x = discretize_transform(phantom, grid);
  const CountField counts = simulate_counts(x, N, KeyedRng(cfg.seed, 0), cfg.sampler);

  const fs::path dir = cfg.output;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  OutputBatch batch;
  batch.add(dir / "sinogram_x.csv", field_to_csv(x));
  batch.add(dir / "sinogram_counts.csv", counts_to_csv(counts));
  batch.add(dir / "sinogram.json", sidecar(cfg, phantom, grid, N).dump(2) + "\n");
  batch.commit();
}

void run_simulate(const ExperimentConfig& cfg) {
  const Phantom phantom = cfg.phantom();
  const auto [n, m] = cfg.grids.front();
  const Grid grid = make_grid(n, m);
  const std::int64_t N = cfg.doses_for(n, m).front();
  const StepField x = discretize_transform(phantom, grid);
  const KeyedRng rng(cfg.seed, 0);
  const CountField counts = simulate_counts(x, N, rng, cfg.sampler);

  const fs::path dir = cfg.output;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  OutputBatch batch;
  batch.add(dir / "simulate_counts.csv", counts_to_csv(counts));
  auto meta = sidecar(cfg, phantom, grid, N);
  meta["modes"] = nlohmann::json::array();
  for (const auto mode : kAllModes) {
    const std::string name = "simulate_" + std::string(to_string(mode)) + ".csv";
    batch.add(dir / name, field_to_csv(observe(counts, mode, rng)));
    meta["modes"].push_back({{"mode", std::string(to_string(mode))}, {"file", name}});
  }
  batch.add(dir / "simulate.json", meta.dump(2) + "\n");
  batch.commit();
}

int dispatch(const std::string& command, const Options& opt) {
  if (command == "phantom") {
    auto catalog = builtin_phantoms();
    if (!opt.config_path.empty()) catalog.push_back(load_config(opt).phantom());
    print_catalog(catalog);
    return 0;
  }
  const ExperimentConfig cfg = load_config(opt);
  if (command == "sinogram") {
    run_sinogram(cfg);
  } else if (command == "simulate") {
    run_simulate(cfg);
  } else {
    ExperimentResult result;
    if (command == "lln") {
      result = run_lln(cfg);
    } else if (command == "clt") {
      result = run_clt(cfg);
    } else if (command == "be") {
      result = run_be(cfg);
    } else if (command == "variance") {
      result = run_variance_convergence(cfg);
    } else if (command == "modes") {
      result = run_mode_comparison(cfg);
    } else {
      throw ConfigError("unknown subcommand " + command);
    }
    write_result(result, cfg.output);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctnoise: photon-count noise in discretized X-ray tomography, checked by simulation"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  const char* commands[][2] = {
      {"phantom", "print the phantom catalog with its metadata"},
      {"sinogram", "export X_{n,m} f and one simulated count field"},
      {"simulate", "export observation fields under all three normalizations"},
      {"lln", "law of large numbers rate experiment"},
      {"clt", "corrected central limit experiment"},
      {"be", "Berry-Esseen experiment for the linearized field"},
      {"variance", "variance convergence table"},
      {"modes", "normalization mode comparison"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (std::string(name) == "phantom") {
      sub->add_option("--config", opt.config_path, "experiment config (JSON)");
    } else {
      sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    }
    sub->add_option("--out", opt.out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "base seed override");
    sub->add_option("--workers", workers, "worker threads (never changes results)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitConfig, "usage", e.what());
  }

  const auto* chosen = app.get_subcommands().front();
  if (chosen->count("--seed") > 0) opt.seed = seed;
  if (chosen->count("--workers") > 0) opt.workers = workers;

  try {
    return dispatch(chosen->get_name(), opt);
  } catch (const IoError& e) {
    return fail(kExitIo, "io", e.what());
  } catch (const ConfigError& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const NumericalError& e) {
    return fail(kExitNumerical, "numerical", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const std::exception& e) {
    return fail(1, "internal", e.what());
  }
}
