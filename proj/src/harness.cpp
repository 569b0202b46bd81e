#include "aggrevate/harness.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "aggrevate/parallel.hpp"

namespace aggrevate {

namespace fs = std::filesystem;
using nlohmann::json;

// Config parsing --------------------------------------------------------------

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

/// Line of the first occurrence of "key" in the source, or 0.
int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

[[noreturn]] void config_fail(const std::string& text, const std::string& field,
                              const std::string& message) {
  const auto leaf = field.substr(field.find_last_of('.') + 1);
  const int line = line_of_key(text, leaf);
  std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
  throw ConfigError(where + field + ": " + message);
}

class FieldReader {
 public:
  FieldReader(const std::string& text, const json& obj, std::string prefix)
      : text_(text), obj_(obj), prefix_(std::move(prefix)) {}

  void reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [key, _] : obj_.items()) {
      if (!allowed.contains(key)) config_fail(text_, name(key), "unknown field");
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }

  void integer(const char* key, int& out) const {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_number_integer()) config_fail(text_, name(key), "expected an integer");
    out = v.get<int>();
  }

  void unsigned64(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_number_unsigned()) config_fail(text_, name(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_number()) config_fail(text_, name(key), "expected a number");
    out = v.get<double>();
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_boolean()) config_fail(text_, name(key), "expected true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_string()) config_fail(text_, name(key), "expected a string");
    out = v.get<std::string>();
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  const std::string& text_;
  const json& obj_;
  std::string prefix_;
};

template <class T>
std::vector<T> grid_axis(const std::string& text, const json& grid, const char* key) {
  std::vector<T> out;
  if (!grid.contains(key)) return out;
  const auto& v = grid.at(key);
  const std::string field = std::string("grid.") + key;
  if (!v.is_array() || v.empty()) config_fail(text, field, "expected a nonempty array");
  for (const auto& e : v) {
    if constexpr (std::is_same_v<T, double>) {
      if (!e.is_number()) config_fail(text, field, "expected numbers");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!e.is_number_unsigned()) config_fail(text, field, "expected non-negative integers");
    } else {
      if (!e.is_number_integer()) config_fail(text, field, "expected integers");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

/// Index K from "member:K", or nullopt for other names.
std::optional<std::size_t> member_index(const std::string& name) {
  if (!name.starts_with("member:")) return std::nullopt;
  const std::string digits = name.substr(7);
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(std::stoul(digits));
}

void validate_values(const std::string& text, const ExperimentConfig& c) {
  static const std::set<std::string> kAlgorithms{"aggrevate", "nrpi", "dagger_classification",
                                                 "behavior_cloning"};
  if (!kAlgorithms.contains(c.algorithm)) config_fail(text, "algorithm", "unknown algorithm '" + c.algorithm + "'");
  if (c.policy_class != "default" && c.policy_class != "cliff_imperfect") {
    config_fail(text, "policy_class", "expected default or cliff_imperfect");
  }
  if (c.policy_class == "cliff_imperfect" && c.env.kind != "cliff_corridor") {
    config_fail(text, "policy_class", "cliff_imperfect needs a cliff_corridor environment");
  }
  if (c.N < 1) config_fail(text, "N", "must be at least 1");
  if (c.m < 1) config_fail(text, "m", "must be at least 1");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) config_fail(text, "alpha", "must lie in (0,1]");
  if (!(c.eta >= 0.0)) config_fail(text, "eta", "must be >= 0 (0 selects the default)");
  if (!(c.step_size >= 0.0)) config_fail(text, "step_size", "must be >= 0");
  if (!(c.delta > 0.0 && c.delta <= 1.0)) config_fail(text, "delta", "must lie in (0,1]");
  if (c.workers < 1) config_fail(text, "workers", "must be at least 1");
  if (c.validation_budget < 1) config_fail(text, "validation_budget", "must be at least 1");
  if (c.exploration != "expert" && c.exploration != "expert_rollout" &&
      c.exploration != "uniform" && !member_index(c.exploration)) {
    config_fail(text, "exploration", "expected expert, expert_rollout, uniform or member:K");
  }
  if (c.initial != "uniform" && c.initial != "expert" && !member_index(c.initial)) {
    config_fail(text, "initial", "expected uniform, expert or member:K");
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                      ": malformed JSON: " + e.what());
  }
  if (!root.is_object()) throw ConfigError("line 1: config: expected a JSON object");
  const FieldReader r(text, root, "");
  r.reject_unknown({"env", "algorithm", "learner", "policy_class", "features", "N", "m", "alpha",
                    "eta", "step_size", "delta", "seed", "oracle_mode", "workers",
                    "validation_budget", "exploration", "initial", "output_dir", "grid"});

  ExperimentConfig c;
  if (!r.has("env")) throw ConfigError("env: required field missing");
  try {
    c.env = env_config_from_json(root.at("env"));
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    config_fail(text, colon == std::string::npos ? "env" : msg.substr(0, colon),
                colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  r.string("algorithm", c.algorithm);
  std::string learner = to_string(c.learner);
  r.string("learner", learner);
  try {
    c.learner = learner_kind_from_string(learner);
  } catch (const std::invalid_argument& e) {
    config_fail(text, "learner", e.what());
  }
  r.string("policy_class", c.policy_class);
  std::string features = to_string(c.features);
  r.string("features", features);
  try {
    c.features = feature_kind_from_string(features);
  } catch (const std::invalid_argument& e) {
    config_fail(text, "features", e.what());
  }
  r.integer("N", c.N);
  r.integer("m", c.m);
  r.number("alpha", c.alpha);
  r.number("eta", c.eta);
  r.number("step_size", c.step_size);
  r.number("delta", c.delta);
  if (r.has("seed")) {
    std::uint64_t seed = 0;
    r.unsigned64("seed", seed);
    c.seed = seed;
  }
  r.boolean("oracle_mode", c.oracle_mode);
  r.integer("workers", c.workers);
  r.integer("validation_budget", c.validation_budget);
  r.string("exploration", c.exploration);
  r.string("initial", c.initial);
  if (r.has("output_dir")) {
    std::string dir;
    r.string("output_dir", dir);
    c.output_dir = dir;
  }
  if (r.has("grid")) {
    const auto& g = root.at("grid");
    if (!g.is_object()) config_fail(text, "grid", "expected an object");
    FieldReader(text, g, "grid").reject_unknown({"N", "m", "alpha", "seed"});
    SweepGrid grid;
    grid.N = grid_axis<int>(text, g, "N");
    grid.m = grid_axis<int>(text, g, "m");
    grid.alpha = grid_axis<double>(text, g, "alpha");
    grid.seed = grid_axis<std::uint64_t>(text, g, "seed");
    c.grid = std::move(grid);
  }
  validate_values(text, c);
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

json to_json(const ExperimentConfig& c) {
  json j{{"env", to_json(c.env)},
         {"algorithm", c.algorithm},
         {"learner", to_string(c.learner)},
         {"policy_class", c.policy_class},
         {"features", to_string(c.features)},
         {"N", c.N},
         {"m", c.m},
         {"alpha", c.alpha},
         {"eta", c.eta},
         {"step_size", c.step_size},
         {"delta", c.delta},
         {"oracle_mode", c.oracle_mode},
         {"validation_budget", c.validation_budget},
         {"exploration", c.exploration},
         {"initial", c.initial}};
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

void check_compatibility(const ExperimentConfig& c) {
  if (c.algorithm == "behavior_cloning" &&
      (c.learner == LearnerKind::kHedge || c.learner == LearnerKind::kOgdRegression)) {
    throw IncompatibleLearner("behavior_cloning is a batch method: use ftl or batch_regression");
  }
}

Experiment build_experiment(const ExperimentConfig& c) {
  Experiment e{[&] {
                 try {
                   return make_environment(c.env);
                 } catch (const std::invalid_argument& err) {
                   throw ConfigError(std::string("env: ") + err.what());
                 }
               }(),
               {},
               {}};
  e.learner.kind = c.learner;
  e.learner.features = c.features;
  e.learner.eta = c.eta;
  e.learner.step_size = c.step_size;
  e.learner.policy_class =
      c.policy_class == "cliff_imperfect" ? cliff_imperfect_class(c.env.cliff) : e.env.policy_class;
  e.options.iterations = c.N;
  e.options.samples = c.m;
  e.options.schedule = BetaSchedule{c.alpha};
  e.options.seed = c.seed.value_or(0);
  e.options.workers = c.workers;
  e.options.oracle = c.oracle_mode;
  e.options.validation = ValidationConfig{c.oracle_mode, c.validation_budget};
  return e;
}

namespace {

Policy class_member(const ExperimentConfig& c, const Environment& env, const std::string& field,
                    std::size_t k) {
  const auto& cls =
      c.policy_class == "cliff_imperfect" ? cliff_imperfect_class(c.env.cliff) : *env.policy_class;
  if (k >= cls.size()) {
    throw ConfigError(field + ": member index " + std::to_string(k) + " out of range");
  }
  return cls.members[k];
}

}  // namespace

Exploration nrpi_exploration(const ExperimentConfig& c, const Environment& env) {
  if (c.exploration == "expert") return exact_state_distributions(env.spec, env.expert);
  if (c.exploration == "expert_rollout") return env.expert;
  if (c.exploration == "uniform") {
    const int S = env.spec.num_states;
    return StateDistSchedule::from_per_time(
        Mat(static_cast<std::size_t>(env.spec.horizon), Vec(static_cast<std::size_t>(S), 1.0 / S)));
  }
  return exact_state_distributions(
      env.spec, class_member(c, env, "exploration", *member_index(c.exploration)));
}

Policy nrpi_initial(const ExperimentConfig& c, const Environment& env) {
  if (c.initial == "uniform") {
    return Policy::uniform_random(env.spec.num_states, env.spec.num_actions, env.spec.horizon);
  }
  if (c.initial == "expert") return env.expert;
  return class_member(c, env, "initial", *member_index(c.initial));
}

// Report writing ----------------------------------------------------------------

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json iteration_json(const IterationRecord& r) {
  json j{{"iteration", r.iteration},
         {"beta", r.beta},
         {"round_loss", r.round_loss},
         {"exact_j", opt(r.exact_j)}};
  if (r.member) j["member"] = *r.member;
  if (!r.member_losses.empty()) j["member_losses"] = r.member_losses;
  if (r.eta) j["eta"] = *r.eta;
  return j;
}

json check_json(const Theorem1Check& c) {
  return {{"lhs", c.lhs},           {"rhs", c.rhs},
          {"margin", c.margin()},   {"holds", c.holds},
          {"eps_class", c.eps_class}, {"eps_regret", c.eps_regret},
          {"q_star_max", c.q_star_max}, {"n_beta", c.n_beta},
          {"remainder", c.remainder}, {"j_mixture", c.j_mixture},
          {"j_expert", c.j_expert}};
}

json check_json(const Theorem2Diagnostics& c) {
  return {{"lhs", c.lhs},
          {"rhs", c.rhs},
          {"margin", c.margin()},
          {"holds", c.holds},
          {"eps_class_hat", c.eps_class_hat},
          {"eps_regret_hat", c.eps_regret_hat},
          {"concentration", c.concentration},
          {"loss_max", c.loss_max},
          {"learner_avg_loss", c.learner_avg_loss},
          {"best_in_class_loss", c.best_in_class_loss},
          {"cell_mean_loss", c.cell_mean_loss},
          {"remainder", c.remainder},
          {"delta", c.delta}};
}

json check_json(const Theorem3Check& c, std::size_t comparator) {
  return {{"comparator", comparator}, {"lhs", c.lhs},
          {"rhs", c.rhs},             {"margin", c.margin()},
          {"holds", c.holds},         {"eps_regret", c.eps_regret},
          {"q_max", c.q_max},         {"distance", c.distance},
          {"j_mixture", c.j_mixture}, {"j_comparator", c.j_comparator}};
}

/// Theorem blocks applicable to a run. `consistent` folds into every holds.
json theorem_blocks(const ExperimentConfig& c, const Experiment& e, const RunReport& report,
                    const Vec& recorded_j, bool consistent) {
  json out = json::object();
  const bool finite = !is_regression(c.learner);
  if (c.algorithm == "aggrevate" && finite) {
    auto t1 = check_json(
        theorem1_check(report, e.env.spec, e.env.expert, *e.learner.policy_class, recorded_j));
    t1["holds"] = t1["holds"].get<bool>() && consistent;
    out["theorem1"] = t1;
  }
  if (c.algorithm == "aggrevate" && !finite) {
    auto t2 = check_json(theorem2_diagnostics(report, e.env.spec, e.env.expert, c.delta, recorded_j));
    t2["holds"] = t2["holds"].get<bool>() && consistent;
    out["theorem2"] = t2;
  }
  if (c.algorithm == "nrpi" && finite) {
    const auto nu = exploration_schedule(e.env.spec, nrpi_exploration(c, e.env));
    const auto& cls = *e.learner.policy_class;
    json comparators = json::array();
    bool all = consistent;
    for (std::size_t k = 0; k < cls.size(); ++k) {
      const auto check = theorem3_check(report, e.env.spec, cls.members[k], nu, cls, recorded_j);
      all = all && check.holds;
      comparators.push_back(check_json(check, k));
    }
    out["theorem3"] = {{"comparators", comparators}, {"holds", all}};
  }
  return out;
}

/// Headline bound (the tightest one) for sweep rows.
json headline_bound(const json& bounds) {
  if (bounds.contains("theorem1")) {
    const auto& b = bounds["theorem1"];
    return {{"theorem", "theorem1"}, {"lhs", b["lhs"]}, {"rhs", b["rhs"]}, {"margin", b["margin"]}, {"holds", b["holds"]}};
  }
  if (bounds.contains("theorem2")) {
    const auto& b = bounds["theorem2"];
    return {{"theorem", "theorem2"}, {"lhs", b["lhs"]}, {"rhs", b["rhs"]}, {"margin", b["margin"]}, {"holds", b["holds"]}};
  }
  if (bounds.contains("theorem3")) {
    const json* best = nullptr;
    for (const auto& b : bounds["theorem3"]["comparators"]) {
      if (!best || b["margin"].get<double>() < (*best)["margin"].get<double>()) best = &b;
    }
    return {{"theorem", "theorem3"}, {"lhs", (*best)["lhs"]}, {"rhs", (*best)["rhs"]}, {"margin", (*best)["margin"]}, {"holds", bounds["theorem3"]["holds"]}};
  }
  return nullptr;
}

std::string imitation_line(std::uint64_t seed, std::uint64_t iteration, std::size_t j,
                           const ImitationExample& ex) {
  return json{{"iteration", iteration},
              {"state", ex.state},
              {"time", ex.time},
              {"expert_action", ex.expert_action},
              {"seed_info",
               {{"seed", seed}, {"lane", static_cast<std::uint64_t>(Lane::kCollect)}, {"sample", j}}}}
      .dump();
}

json run_summary_results(const ExperimentConfig& c, const Experiment& e, const RunReport& report) {
  json results = json::object();
  results["best_iteration"] = report.best_index + 1;
  if (!is_regression(c.learner)) {
    Vec chosen;
    Mat members;
    for (const auto& r : report.iterations) {
      chosen.push_back(r.round_loss);
      members.push_back(r.member_losses);
    }
    const auto terms = regret_terms(chosen, members);
    results["eps_regret_hat"] = terms.eps_regret;
    results["best_member_hat"] = terms.best_member;
    if (report.iterations.back().eta) results["eta"] = *report.iterations.back().eta;
  }
  if (!c.oracle_mode) {
    for (const char* k : {"j_mixture", "j_best", "j_final", "j_expert"}) results[k] = nullptr;
    return results;
  }
  Vec recorded;
  for (const auto& r : report.iterations) recorded.push_back(*r.exact_j);
  double sum = 0.0;
  for (double v : recorded) sum += v;
  results["j_mixture"] = sum / static_cast<double>(recorded.size());
  results["j_best"] = recorded[report.best_index];
  results["j_final"] = policy_value(e.env.spec, *report.final_policy);
  results["j_expert"] = policy_value(e.env.spec, e.env.expert);
  results["q_star_max"] = exact_q(e.env.spec, e.env.expert).max_value();
  const json bounds = theorem_blocks(c, e, report, recorded, true);
  results["bounds"] = bounds;
  if (bounds.contains("theorem1")) {
    results["eps_class"] = bounds["theorem1"]["eps_class"];
    results["eps_regret"] = bounds["theorem1"]["eps_regret"];
  } else if (bounds.contains("theorem3")) {
    results["eps_regret"] = bounds["theorem3"]["comparators"][0]["eps_regret"];
  } else if (bounds.contains("theorem2")) {
    results["eps_class_hat"] = bounds["theorem2"]["eps_class_hat"];
    results["eps_regret_hat"] = bounds["theorem2"]["eps_regret_hat"];
  }
  results["bound"] = headline_bound(bounds);
  return results;
}

}  // namespace

json run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  if (!config.seed) throw ConfigError("seed: required field missing");
  check_compatibility(config);
  const auto start = std::chrono::steady_clock::now();
  const Experiment e = build_experiment(config);
  fs::create_directories(out_dir);

  json summary{{"schema_version", kReportSchemaVersion},
               {"environment_version", kEnvironmentVersion},
               {"config", to_json(config)},
               {"oracle_mode", config.oracle_mode},
               {"seed_info", {{"seed", *config.seed}, {"lanes", {{"collect", 1}, {"learner", 2}, {"validation", 3}}}}}};
  std::ostringstream iterations, policies, data;

  if (config.algorithm == "behavior_cloning") {
    const Policy cloned = behavior_cloning(e.env.spec, e.env.expert, e.learner, e.options);
    policies << json{{"iteration", 1}, {"policy", to_json(cloned)}}.dump() << '\n';
    json results = json::object();
    results["best_iteration"] = 1;
    if (config.oracle_mode) {
      results["j_policy"] = policy_value(e.env.spec, cloned);
      results["j_best"] = results["j_policy"];
      results["j_expert"] = policy_value(e.env.spec, e.env.expert);
    }
    summary["results"] = results;
    write_text(out_dir / "final_policy.json", to_json(cloned).dump() + "\n");
    write_text(out_dir / "best_policy.json", to_json(cloned).dump() + "\n");
  } else {
    RunReport report;
    if (config.algorithm == "aggrevate") {
      report = run_aggrevate(e.env.spec, e.env.expert, e.learner, e.options);
    } else if (config.algorithm == "nrpi") {
      report = run_nrpi(e.env.spec, nrpi_exploration(config, e.env), e.learner,
                        nrpi_initial(config, e.env), e.options);
    } else {
      report = dagger_classification(e.env.spec, e.env.expert, e.learner, e.options);
    }
    for (const auto& r : report.iterations) iterations << iteration_json(r).dump() << '\n';
    for (std::size_t i = 0; i < report.policies.size(); ++i) {
      policies << json{{"iteration", i + 1}, {"policy", to_json(report.policies[i])}}.dump() << '\n';
    }
    for (std::size_t i = 0; i < report.data.num_rounds(); ++i) {
      write_batch(data, *config.seed, i + 1, report.data.rounds()[i]);
    }
    for (std::size_t i = 0; i < report.imitation_data.num_rounds(); ++i) {
      const auto& round = report.imitation_data.rounds()[i];
      for (std::size_t j = 0; j < round.size(); ++j) {
        data << imitation_line(*config.seed, i + 1, j, round[j]) << '\n';
      }
    }
    summary["results"] = run_summary_results(config, e, report);
    write_text(out_dir / "final_policy.json", to_json(*report.final_policy).dump() + "\n");
    write_text(out_dir / "best_policy.json", to_json(report.best_policy()).dump() + "\n");
  }

  write_text(out_dir / "iterations.jsonl", iterations.str());
  write_text(out_dir / "policies.jsonl", policies.str());
  write_text(out_dir / "data.jsonl", data.str());
  write_text(out_dir / "spec.json", mdp_to_text(e.env.spec) + "\n");
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text(out_dir / "timing.json",
             json{{"wall_clock_seconds", seconds}, {"workers", config.workers}}.dump(2) + "\n");
  return summary;
}

// Diagnose ----------------------------------------------------------------------

namespace {

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingDataError(path.filename().string() + " missing from the run directory");
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingDataError(path.filename().string() + " missing from the run directory");
  return json::parse(in);
}

json lemma_checks(const MdpSpec& spec, const Policy& expert, const std::vector<Policy>& policies,
                  const Vec& betas, bool mixing) {
  double pd_error = 0.0;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const Policy& other = i + 1 < policies.size() ? policies[i + 1] : expert;
    const auto pd = performance_difference(spec, policies[i], other);
    pd_error = std::max({pd_error, std::abs(pd.lhs - pd.rhs_form1), std::abs(pd.lhs - pd.rhs_form2)});
  }
  json out{{"performance_difference", {{"pairs", policies.size()}, {"max_abs_error", pd_error}, {"holds", pd_error <= kValidationTol}}}};
  if (mixing) {
    bool all = true;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < policies.size(); ++i) {
      const auto b = mixing_l1_bound_check(spec, expert, policies[i], betas[i]);
      all = all && b.holds;
      worst = std::min(worst, b.bound - b.lhs);
    }
    out["mixing_l1"] = {{"checks", policies.size()}, {"min_slack", worst}, {"holds", all}};
  }
  return out;
}

}  // namespace

json diagnose_run(const fs::path& run_dir) {
  const json summary = read_json(run_dir / "summary.json");
  if (!summary.value("oracle_mode", false)) {
    throw MissingDataError("report was produced without oracle data (oracle_mode off)");
  }
  const ExperimentConfig config = parse_experiment_config(summary.at("config").dump());
  const Experiment e = build_experiment(config);
  const MdpSpec recorded_spec = mdp_from_json(read_json(run_dir / "spec.json"));
  const bool spec_matches = recorded_spec == e.env.spec;

  RunReport report;
  report.algorithm = config.algorithm;
  report.learner = config.learner;
  report.horizon = recorded_spec.horizon;
  report.samples = config.m;
  report.schedule = BetaSchedule{config.alpha};
  report.seed = config.seed.value_or(0);
  for (const auto& line : read_jsonl(run_dir / "policies.jsonl")) {
    report.policies.push_back(policy_from_json(line.at("policy")));
  }
  if (report.policies.empty()) throw MissingDataError("policies.jsonl holds no policies");

  Vec recorded_j, betas;
  if (config.algorithm == "behavior_cloning") {
    const auto& results = summary.at("results");
    if (!results.contains("j_policy")) throw MissingDataError("summary lacks j_policy");
    recorded_j.push_back(results.at("j_policy").get<double>());
    betas.push_back(1.0);
  } else {
    for (const auto& line : read_jsonl(run_dir / "iterations.jsonl")) {
      if (!line.contains("exact_j") || line.at("exact_j").is_null()) {
        throw MissingDataError("iterations.jsonl lacks exact J values");
      }
      recorded_j.push_back(line.at("exact_j").get<double>());
      betas.push_back(line.at("beta").get<double>());
    }
  }
  if (recorded_j.size() != report.policies.size()) {
    throw MissingDataError("iteration records and policies disagree in count");
  }

  double j_error = 0.0;
  for (std::size_t i = 0; i < report.policies.size(); ++i) {
    j_error = std::max(j_error, std::abs(recorded_j[i] - policy_value(recorded_spec, report.policies[i])));
  }
  const bool consistent = spec_matches && j_error <= kValidationTol;

  json out{{"schema_version", kReportSchemaVersion},
           {"run_dir", run_dir.string()},
           {"consistency", {{"spec_matches_config", spec_matches}, {"max_abs_j_error", j_error}, {"consistent", consistent}}}};

  if (config.algorithm != "behavior_cloning") {
    if (is_regression(config.learner)) {
      for (const auto& p : report.policies) report.regressors.push_back(p.regressor());
      std::map<std::uint64_t, std::vector<CostToGoExample>> rounds;
      std::ifstream in(run_dir / "data.jsonl");
      if (!in) throw MissingDataError("data.jsonl missing from the run directory");
      for (const auto& rec : read_example_records(in)) rounds[rec.iteration].push_back(rec.example);
      for (auto& [_, batch] : rounds) report.data.append(std::move(batch));
    }
    out["theorems"] = theorem_blocks(config, e, report, recorded_j, consistent);
  } else {
    out["theorems"] = json::object();
  }
  const bool mixing = config.algorithm == "aggrevate" || config.algorithm == "dagger_classification";
  out["lemmas"] = lemma_checks(recorded_spec, e.env.expert, report.policies, betas, mixing);
  write_text(run_dir / "diagnosis.json", out.dump(2) + "\n");
  return out;
}

// Sweep -------------------------------------------------------------------------

std::string config_hash(const json& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::vector<std::string> sweep_columns() {
  return {"config_hash", "N",          "m",          "alpha",       "seed",
          "j_mixture",   "j_best",     "j_expert",   "eps_class",   "eps_regret",
          "eps_regret_hat", "bound_theorem", "bound_lhs", "bound_rhs", "bound_margin",
          "bound_holds"};
}

namespace {

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

SweepOutcome run_sweep(const ExperimentConfig& config, const fs::path& out_dir, int workers) {
  if (!config.grid) throw ConfigError("grid: required for sweep");
  const auto& g = *config.grid;
  if (!config.seed && g.seed.empty()) throw ConfigError("seed: required field missing");
  const std::vector<int> Ns = g.N.empty() ? std::vector<int>{config.N} : g.N;
  const std::vector<int> ms = g.m.empty() ? std::vector<int>{config.m} : g.m;
  const std::vector<double> alphas = g.alpha.empty() ? std::vector<double>{config.alpha} : g.alpha;
  const std::vector<std::uint64_t> seeds =
      g.seed.empty() ? std::vector<std::uint64_t>{*config.seed} : g.seed;

  std::vector<ExperimentConfig> cells;
  for (int N : Ns) {
    for (int m : ms) {
      for (double alpha : alphas) {
        for (std::uint64_t seed : seeds) {
          ExperimentConfig c = config;
          c.N = N;
          c.m = m;
          c.alpha = alpha;
          c.seed = seed;
          c.grid.reset();
          c.output_dir.reset();
          c.workers = 1;
          if (N < 1 || m < 1 || !(alpha > 0.0 && alpha <= 1.0)) {
            throw ConfigError("grid: cell N=" + std::to_string(N) + " m=" + std::to_string(m) +
                              " has out-of-range values");
          }
          cells.push_back(std::move(c));
        }
      }
    }
  }
  check_compatibility(config);
  fs::create_directories(out_dir / "cells");

  const auto computed = parallel_generate<int>(cells.size(), workers, [&](std::size_t k) {
    const fs::path dir = out_dir / "cells" / config_hash(to_json(cells[k]));
    if (fs::exists(dir / "summary.json")) return 0;
    run_experiment(cells[k], dir);
    return 1;
  });

  std::ostringstream csv;
  const auto cols = sweep_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  csv << '\n';
  for (const auto& c : cells) {
    const std::string hash = config_hash(to_json(c));
    const json s = read_json(out_dir / "cells" / hash / "summary.json");
    const json& r = s.at("results");
    const json bound = r.value("bound", json(nullptr));
    auto field = [&](const char* k) { return r.contains(k) ? r.at(k) : json(nullptr); };
    auto bfield = [&](const char* k) { return bound.is_object() ? bound.at(k) : json(nullptr); };
    const std::vector<json> row{hash,          c.N,          c.m,          c.alpha,
                                *c.seed,       field("j_mixture"), field("j_best"), field("j_expert"),
                                field("eps_class"), field("eps_regret"), field("eps_regret_hat"),
                                bfield("theorem"), bfield("lhs"), bfield("rhs"), bfield("margin"),
                                bfield("holds")};
    for (std::size_t i = 0; i < row.size(); ++i) csv << (i ? "," : "") << csv_cell(row[i]);
    csv << '\n';
  }
  SweepOutcome out;
  out.cells = cells.size();
  for (int v : computed) out.computed += static_cast<std::size_t>(v);
  out.csv = out_dir / "sweep.csv";
  write_text(out.csv, csv.str());
  return out;
}

// Command-line layer ------------------------------------------------------------

namespace {

ExperimentConfig config_with_overrides(const CliOptions& cli) {
  if (!cli.config) throw ConfigError("--config: required");
  ExperimentConfig c = load_experiment_config(*cli.config);
  if (cli.seed) c.seed = *cli.seed;
  if (cli.oracle) c.oracle_mode = *cli.oracle;
  if (cli.workers) {
    if (*cli.workers < 1) throw ConfigError("--workers: must be at least 1");
    c.workers = *cli.workers;
  }
  return c;
}

fs::path resolve_out_dir(const CliOptions& cli, const ExperimentConfig& c) {
  if (cli.out_dir) return *cli.out_dir;
  if (c.output_dir) return *c.output_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    return fs::path(env) / (c.algorithm + "-seed" + std::to_string(c.seed.value_or(0)));
  }
  return fs::path("aggrevate_runs") / (c.algorithm + "-seed" + std::to_string(c.seed.value_or(0)));
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IncompatibleLearner& e) {
    err << "incompatible configuration: " << e.what() << '\n';
    return kExitIncompatible;
  } catch (const MissingDataError& e) {
    err << "missing data: " << e.what() << '\n';
    return kExitMissingData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

void print_bool_line(std::ostream& out, const std::string& name, const json& block) {
  if (block.contains("comparators")) {
    for (const auto& c : block.at("comparators")) {
      print_bool_line(out, name + "[comparator " + c.at("comparator").dump() + "]", c);
    }
    return;
  }
  out << name << ": lhs=" << block.value("lhs", 0.0) << " rhs=" << block.value("rhs", 0.0)
      << " holds=" << (block.value("holds", false) ? "true" : "false") << '\n';
}

}  // namespace

int cmd_run(const CliOptions& cli, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig c = config_with_overrides(cli);
    if (!c.seed) throw ConfigError("seed: required field missing (set it in the config or pass --seed)");
    const fs::path dir = resolve_out_dir(cli, c);
    const json summary = run_experiment(c, dir);
    const json& r = summary.at("results");
    out << "wrote " << dir.string() << '\n';
    for (const char* k : {"j_mixture", "j_best", "j_policy", "j_expert", "eps_class", "eps_regret"}) {
      if (r.contains(k) && !r.at(k).is_null()) out << k << " = " << r.at(k).dump() << '\n';
    }
    return kExitOk;
  });
}

int cmd_diagnose(const CliOptions& cli, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto dir = cli.path ? *cli.path : cli.out_dir;
    if (!dir) throw ConfigError("diagnose: report directory required");
    const json d = diagnose_run(*dir);
    for (const auto& [name, block] : d.at("theorems").items()) print_bool_line(out, name, block);
    out << "consistent: " << (d["consistency"]["consistent"].get<bool>() ? "true" : "false") << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const CliOptions& cli, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig c = config_with_overrides(cli);
    const fs::path dir = resolve_out_dir(cli, c);
    const auto outcome = run_sweep(c, dir, c.workers);
    out << "cells " << outcome.cells << ", computed " << outcome.computed << ", csv "
        << outcome.csv.string() << '\n';
    return kExitOk;
  });
}

int cmd_validate(const CliOptions& cli, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto path = cli.path ? cli.path : cli.config;
    if (!path) throw ConfigError("validate: a file is required");
    std::ifstream in(*path);
    if (!in) throw ConfigError(*path + ": cannot open");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("line " + std::to_string(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                        ": malformed JSON");
    }
    MdpSpec spec;
    if (j.is_object() && j.contains("num_states")) {
      try {
        spec = mdp_from_json(j);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    } else {
      const ExperimentConfig c = parse_experiment_config(text);
      check_compatibility(c);
      spec = build_experiment(c).env.spec;
    }
    const auto report = validate_mdp(spec);
    for (const auto& v : report.violations) out << v.path << ": " << v.message << '\n';
    if (!report.ok()) {
      err << report.violations.size() << " violation(s)\n";
      return kExitConfig;
    }
    out << "ok\n";
    return kExitOk;
  });
}

}  // namespace aggrevate
