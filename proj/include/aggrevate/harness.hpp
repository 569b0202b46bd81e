#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggrevate/algorithms.hpp"
#include "aggrevate/envs.hpp"

namespace aggrevate {

inline constexpr int kReportSchemaVersion = 1;

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIncompatible = 3,
  kExitMissingData = 4,
};

/// Malformed configuration. what() carries "line L: field: message" when the
/// location is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The report lacks the oracle data a command needs.
class MissingDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepGrid {
  std::vector<int> N;
  std::vector<int> m;
  std::vector<double> alpha;
  std::vector<std::uint64_t> seed;
};

struct ExperimentConfig {
  EnvConfig env;
  std::string algorithm = "aggrevate";  // aggrevate | nrpi | dagger_classification | behavior_cloning
  LearnerKind learner = LearnerKind::kFtl;
  std::string policy_class = "default";  // default | cliff_imperfect
  FeatureKind features = FeatureKind::kStateActionPlusTime;
  int N = 10;
  int m = 100;
  double alpha = 1.0;
  double eta = 0.0;
  double step_size = 0.5;
  double delta = 0.1;
  std::optional<std::uint64_t> seed;
  bool oracle_mode = true;
  int workers = 1;
  int validation_budget = 1000;
  /// nrpi: expert | expert_rollout | uniform | member:K
  std::string exploration = "expert";
  /// nrpi: uniform | expert | member:K
  std::string initial = "uniform";
  std::optional<std::string> output_dir;
  std::optional<SweepGrid> grid;
};

/// Strict parse of the JSON config text; unknown fields are errors.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Canonical form embedded in reports. Omits workers, output_dir and grid, none
/// of which influence numeric results.
nlohmann::json to_json(const ExperimentConfig& config);

/// Throws IncompatibleLearner for learner/algorithm combinations that cannot run.
void check_compatibility(const ExperimentConfig& config);

/// Everything a run needs, built from a config.
struct Experiment {
  Environment env;
  LearnerConfig learner;
  RunOptions options;
};
Experiment build_experiment(const ExperimentConfig& config);

/// NRPI exploration and initial policy named by the config.
Exploration nrpi_exploration(const ExperimentConfig& config, const Environment& env);
Policy nrpi_initial(const ExperimentConfig& config, const Environment& env);

/// Runs the configured algorithm and writes iterations.jsonl, summary.json,
/// policies.jsonl, data.jsonl, spec.json, timing.json under out_dir. Returns
/// the summary document.
nlohmann::json run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Recomputes bound checks for a finished run directory and writes
/// diagnosis.json. Throws MissingDataError when the run had no oracle data.
nlohmann::json diagnose_run(const std::filesystem::path& run_dir);

/// 64-bit FNV-1a over the canonical config text, as 16 hex digits.
std::string config_hash(const nlohmann::json& canonical);

struct SweepOutcome {
  std::size_t cells = 0;
  std::size_t computed = 0;
  std::filesystem::path csv;
};

/// One cell per element of N x m x alpha x seed. Finished cells (with a
/// summary.json) are reused; sweep.csv is rewritten from all cells.
SweepOutcome run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                       int workers);

/// Fixed column order of sweep.csv.
std::vector<std::string> sweep_columns();

// Command-line layer --------------------------------------------------------

struct CliOptions {
  std::optional<std::string> config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<bool> oracle;
  std::optional<int> workers;
  std::optional<std::string> path;  // report dir for diagnose, spec file for validate
};

/// Name of the environment variable holding the default output directory.
inline constexpr const char* kOutDirEnv = "AGGREVATE_OUT_DIR";

int cmd_run(const CliOptions& cli, std::ostream& out, std::ostream& err);
int cmd_diagnose(const CliOptions& cli, std::ostream& out, std::ostream& err);
int cmd_sweep(const CliOptions& cli, std::ostream& out, std::ostream& err);
int cmd_validate(const CliOptions& cli, std::ostream& out, std::ostream& err);

}  // namespace aggrevate
