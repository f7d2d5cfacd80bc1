// Command-line front end: run, sweep, compare, oracle.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "proud/error.hpp"
#include "proud/harness/config.hpp"
#include "proud/harness/experiment.hpp"
#include "proud/harness/format.hpp"
#include "proud/oracle/suite.hpp"

namespace fs = std::filesystem;
using namespace proud;

namespace {

void apply_overrides(harness::json& j, const std::optional<long long>& seed, bool trace,
                     const std::optional<int>& threads) {
  if (seed) j["seed"] = *seed;
  if (trace) {
    if (!j.contains("metrics") || !j["metrics"].is_object()) throw ConfigError("metrics", "required");
    j["metrics"]["trace"] = true;
  }
  if (threads) j["threads"] = *threads;
}

fs::path pick_out(const std::string& flag, const harness::RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  throw ConfigError("output_dir", "no output directory: set output_dir in the config or pass --out");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto-guided diffusion sampler and baselines on analytic problems"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<long long> seed;
  std::optional<int> threads;
  bool trace = false;
  int parallel = 1;
  std::vector<std::string> run_dirs;

  auto* run = app.add_subcommand("run", "Run one configuration");
  run->add_option("-c,--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("-s,--seed", seed, "Seed override");
  run->add_flag("--trace", trace, "Write per-step trace.jsonl");
  run->add_option("-j,--threads", threads, "Worker threads within the run")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("-c,--config", config_path, "Sweep file (JSON with base, grid, replicates)")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("-o,--out", out_dir, "Parent output directory")->required();
  sweep->add_option("-s,--seed", seed, "Base seed override");
  sweep->add_flag("--trace", trace, "Write per-step traces");
  sweep->add_option("-p,--parallel", parallel, "Runs executed concurrently")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "Tabulate metrics of finished runs");
  cmp->add_option("runs", run_dirs, "Run directories")->required();

  auto* orc = app.add_subcommand("oracle", "Check the solvers against brute-force references");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      harness::json j = harness::read_json_file(config_path);
      apply_overrides(j, seed, trace, threads);
      const harness::RunConfig cfg = harness::parse_config(j);
      const fs::path dir = pick_out(out_dir, cfg);
      const auto res = harness::run_experiment(cfg, dir);
      std::printf("%s hv=%s mean_log_likelihood=%s pct_stationary=%s fallbacks=%ld (%.2fs) -> %s\n",
                  std::string(method_name(cfg.guidance.method)).c_str(), harness::fmt(res.report.hv).c_str(),
                  harness::fmt(res.report.mean_log_likelihood).c_str(),
                  harness::fmt(res.report.pct_stationary).c_str(), res.population.fallbacks, res.seconds,
                  dir.string().c_str());
      return 0;
    }
    if (*sweep) {
      harness::json j = harness::read_json_file(config_path);
      if (j.contains("base")) apply_overrides(j["base"], seed, trace, std::nullopt);
      const auto dirs = harness::run_sweep(j, out_dir, parallel);
      std::printf("%zu runs written under %s\n", dirs.size(), out_dir.c_str());
      return 0;
    }
    if (*cmp) {
      std::vector<fs::path> paths(run_dirs.begin(), run_dirs.end());
      std::cout << harness::compare(paths);
      return 0;
    }
    if (*orc) {
      const auto t0 = std::chrono::steady_clock::now();
      bool ok = true;
      for (const auto& r : oracle::run_suite()) {
        std::printf("[%s] %s: %s (%.2fs)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
        ok = ok && r.passed;
      }
      const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("oracle suite %s in %.2fs\n", ok ? "passed" : "FAILED", total);
      return ok ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
