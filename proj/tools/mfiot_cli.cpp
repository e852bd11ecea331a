// Batch front end: solve one equilibrium, sweep a parameter axis, or run
// the analytic-vs-Monte-Carlo validation suite. All results land as CSV
// files under --out.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "mfiot/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  long seed = -1;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config file");
  cmd->add_option("--out", args.out, "output directory (default from config)");
  cmd->add_option("--set", args.overrides, "override a config key, key=value")
      ->take_all();
  cmd->add_option("--seed", args.seed, "override the Monte Carlo seed");
  cmd->add_option("--workers", args.workers, "parallel sweep workers");
}

mfiot::cli::ExperimentConfig build_config(const CommonArgs& args) {
  mfiot::cli::ExperimentConfig cfg;
  if (!args.config.empty()) cfg = mfiot::cli::parse_config_file(args.config);
  for (const std::string& kv : args.overrides) mfiot::cli::apply_override(cfg, kv);
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.workers > 0) cfg.workers = args.workers;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field power allocation for grant-free IoT uplink"};
  app.require_subcommand(1);

  CommonArgs solve_args, sweep_args, validate_args;
  CLI::App* solve = app.add_subcommand("solve", "solve one equilibrium");
  CLI::App* sweep = app.add_subcommand("sweep", "solve along one parameter axis");
  CLI::App* validate = app.add_subcommand("validate", "run Monte Carlo cross-checks");
  add_common(solve, solve_args);
  add_common(sweep, sweep_args);
  add_common(validate, validate_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve->parsed()) return mfiot::cli::run_solve(build_config(solve_args));
    if (sweep->parsed()) return mfiot::cli::run_sweep(build_config(sweep_args));
    return mfiot::cli::run_validate(build_config(validate_args));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
