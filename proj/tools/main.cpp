#include <iostream>

#include <CLI11.hpp>

#include "aggrevate/harness.hpp"

namespace {

void add_common(CLI::App* cmd, aggrevate::CliOptions& o, int& workers, std::uint64_t& seed) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--seed", seed, "Override the config seed");
  cmd->add_flag("--oracle,!--no-oracle", "Enable or disable exact oracle evaluation");
  cmd->add_option("--workers", workers, "Threads for data collection or sweep cells")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon MDP lab: AggreVaTe, NRPI and baselines"};
  app.require_subcommand(1);
  aggrevate::CliOptions opts;
  int workers = 0;
  std::uint64_t seed = 0;
  std::string path;

  auto* run = app.add_subcommand("run", "Run one configured experiment");
  add_common(run, opts, workers, seed);
  auto* sweep = app.add_subcommand("sweep", "Run every cell of the config's grid");
  add_common(sweep, opts, workers, seed);
  auto* diagnose = app.add_subcommand("diagnose", "Recompute bound checks for a run directory");
  diagnose->add_option("report", path, "Run directory written by `run`");
  diagnose->add_option("--out-dir", opts.out_dir, "Run directory (alternative to the positional)");
  auto* validate = app.add_subcommand("validate", "Lint an MDP spec or an experiment config");
  validate->add_option("file", path, "MDP spec or config file");
  validate->add_option("--config", opts.config, "Experiment config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : aggrevate::kExitConfig;
  }

  for (auto* cmd : {run, sweep}) {
    if (!cmd->parsed()) continue;
    if (cmd->count("--seed") > 0) opts.seed = seed;
    if (cmd->count("--workers") > 0) opts.workers = workers;
    const auto oracle_flags = cmd->count("--oracle");
    if (oracle_flags > 0) opts.oracle = cmd->get_option("--oracle")->as<bool>();
  }
  if (!path.empty()) opts.path = path;

  if (run->parsed()) return aggrevate::cmd_run(opts, std::cout, std::cerr);
  if (sweep->parsed()) return aggrevate::cmd_sweep(opts, std::cout, std::cerr);
  if (diagnose->parsed()) return aggrevate::cmd_diagnose(opts, std::cout, std::cerr);
  return aggrevate::cmd_validate(opts, std::cout, std::cerr);
}
