// Command-line front end: run, sweep, verify, presets.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sanc/sanc.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitVerify = 3;

std::string output_dir(const sanc::ExperimentConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SANC_OUTPUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

int run_ensemble(sanc::ExperimentConfig cfg, const std::string& out_flag, unsigned threads) {
  const std::string dir = output_dir(cfg, out_flag);
  const auto res = sanc::monte_carlo(cfg, threads);
  const auto rep = sanc::write_ensemble(cfg, res, dir);
  std::cout << rep.text();
  std::cout << "wrote " << res.runs.size() << " trajectories to " << dir << "\n";
  if (res.divergence_fraction() > 0.1) {
    std::cerr << res.diverged << " of " << res.runs.size() << " runs diverged\n";
    return kExitDivergence;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive neural backstepping for stochastic strict-feedback plants"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int runs = 0;
  unsigned threads = 0;
  bool full_rate = false;

  auto* run = app.add_subcommand("run", "Simulate one closed-loop run");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override master_seed");
  run->add_option("--out", out_dir, "Output directory (overrides SANC_OUTPUT_DIR and the config)");
  run->add_flag("--full-rate", full_rate, "Record every integration step");

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo ensemble");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--runs", runs, "Ensemble size (overrides the config)")->check(CLI::PositiveNumber);
  auto* sweep_seed = sweep->add_option("--seed", seed, "Override master_seed");
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  sweep->add_flag("--full-rate", full_rate, "Record every integration step");

  auto* verify = app.add_subcommand("verify", "Run the property suites");
  auto* presets = app.add_subcommand("presets", "List plant presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*presets) {
      for (const auto& name : sanc::preset_names()) {
        const auto cfg = sanc::preset_config(name);
        std::cout << name << ": order " << cfg.x0.size() << ", x0 = (";
        for (std::size_t i = 0; i < cfg.x0.size(); ++i) std::cout << (i ? ", " : "") << cfg.x0[i];
        std::cout << ")\n";
      }
      return kExitOk;
    }
    if (*verify) {
      bool ok = true;
      for (const auto& s : sanc::verify_all()) {
        std::cout << (s.pass ? "PASS " : "FAIL ") << s.name << "  " << s.detail << "\n";
        ok = ok && s.pass;
      }
      return ok ? kExitOk : kExitVerify;
    }

    sanc::ExperimentConfig cfg;
    try {
      cfg = sanc::load_config(config_path);
    } catch (const sanc::ConfigError& e) {
      std::cerr << e.what() << "\n";
      return kExitConfig;
    }
    if (full_rate) cfg.record_stride = 1;
    if (*run) {
      if (*seed_opt) cfg.master_seed = seed;
      cfg.runs = 1;
      return run_ensemble(cfg, out_dir, 1);
    }
    if (*sweep_seed) cfg.master_seed = seed;
    if (runs > 0) cfg.runs = runs;
    return run_ensemble(cfg, out_dir, threads);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
}
