#include "aggrevate/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include "aggrevate/parallel.hpp"

namespace aggrevate {

double BetaSchedule::beta(int i) const {
  if (i < 1) throw std::invalid_argument("beta schedule is indexed from 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  if (i == 1) return 1.0;
  return std::pow(1.0 - alpha, i - 1);
}

int BetaSchedule::n_beta(int horizon, int num_iterations) const {
  int n = 0;
  for (int i = 1; i <= num_iterations; ++i) {
    if (beta(i) > 1.0 / horizon) n = i;
  }
  return n;
}

double BetaSchedule::remainder_factor(int horizon, int num_iterations) const {
  const int n = n_beta(horizon, num_iterations);
  double tail = 0.0;
  for (int i = n + 1; i <= num_iterations; ++i) tail += beta(i);
  return n + horizon * tail;
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kFtl:
      return "ftl";
    case LearnerKind::kHedge:
      return "hedge";
    case LearnerKind::kOgdRegression:
      return "ogd_regression";
    case LearnerKind::kBatchRegression:
      return "batch_regression";
  }
  throw std::logic_error("unknown learner kind");
}

LearnerKind learner_kind_from_string(const std::string& name) {
  for (auto k : {LearnerKind::kFtl, LearnerKind::kHedge, LearnerKind::kOgdRegression,
                 LearnerKind::kBatchRegression}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown learner '" + name + "'");
}

bool is_regression(LearnerKind kind) {
  return kind == LearnerKind::kOgdRegression || kind == LearnerKind::kBatchRegression;
}

Policy RunReport::mixture() const {
  if (policies.empty()) throw std::logic_error("run report holds no policies");
  return Policy::trajectory_mixture(policies);
}

namespace {

void require_run_options(const RunOptions& o) {
  if (o.iterations < 1) throw std::invalid_argument("N must be at least 1");
  if (o.samples < 1) throw std::invalid_argument("m must be at least 1");
  o.schedule.beta(1);
}

const FinitePolicyClass& require_class(const LearnerConfig& cfg, const MdpSpec& spec) {
  if (!cfg.policy_class) {
    throw IncompatibleLearner(to_string(cfg.kind) + " needs a finite policy class");
  }
  if (cfg.policy_class->members.empty()) throw IncompatibleLearner("policy class is empty");
  for (const auto& m : cfg.policy_class->members) {
    require_compatible(spec, m);
    if (!m.is_markov()) throw IncompatibleLearner("policy class members must be Markov");
  }
  return *cfg.policy_class;
}

std::vector<CostToGoExample> regression_targets(const std::vector<CostToGoExample>& batch, int) {
  return batch;
}

std::vector<CostToGoExample> regression_targets(const std::vector<ImitationExample>& batch,
                                                int num_actions) {
  return indicator_targets(batch, num_actions);
}

Vec batch_member_losses(const std::vector<CostToGoExample>& b, const FinitePolicyClass& c) {
  return member_cs_losses(b, c);
}

Vec batch_member_losses(const std::vector<ImitationExample>& b, const FinitePolicyClass& c) {
  return member_zero_one_losses(b, c);
}

double batch_loss(const std::vector<CostToGoExample>& b, const Policy& pi) {
  return empirical_cs_loss(b, pi);
}

double batch_loss(const std::vector<ImitationExample>& b, const Policy& pi) {
  return zero_one_loss(b, pi);
}

void store(RunReport& r, std::vector<CostToGoExample> batch) { r.data.append(std::move(batch)); }
void store(RunReport& r, std::vector<ImitationExample> batch) {
  r.imitation_data.append(std::move(batch));
}

/// State shared by every outer loop: the learner's current play and how it
/// is updated after each round.
class OnlineLearner {
 public:
  OnlineLearner(const MdpSpec& spec, const LearnerConfig& cfg, const RunOptions& options,
                std::optional<Policy> initial)
      : cfg_(cfg), options_(options), initial_(std::move(initial)) {
    features_ = FeatureMap{cfg.features, spec.num_states, spec.num_actions, spec.horizon};
    if (is_regression(cfg.kind)) {
      reg_ = LinearQRegressor::zeros(features_);
    } else {
      cls_ = require_class(cfg, spec);
      totals_.assign(cls_.size(), 0.0);
    }
  }

  bool finite_class() const { return !is_regression(cfg_.kind); }
  const FinitePolicyClass& policy_class() const { return cls_; }
  const LinearQRegressor& regressor() const { return reg_; }

  /// The play for round i (1-based); also sets member().
  Policy play(int i) {
    member_.reset();
    if (i == 1 && initial_) return *initial_;
    switch (cfg_.kind) {
      case LearnerKind::kFtl:
        member_ = static_cast<std::size_t>(argmin_action(totals_));
        return cls_.members[*member_];
      case LearnerKind::kHedge: {
        RngStream rng(options_.seed, {static_cast<std::uint64_t>(i), Lane::kLearner, 0});
        member_ = static_cast<std::size_t>(rng.categorical(cls_.weights));
        return cls_.members[*member_];
      }
      default:
        return Policy::linear_argmin(reg_);
    }
  }

  std::optional<std::size_t> member() const { return member_; }

  /// Per-member losses on the batch plus the loss of `played` for class
  /// learners; the regressor's squared loss otherwise.
  template <class Example>
  std::pair<double, Vec> round_losses(const std::vector<Example>& batch, const Policy& played,
                                      int num_actions) const {
    if (!finite_class()) {
      return {squared_loss(reg_, regression_targets(batch, num_actions)), {}};
    }
    Vec losses = batch_member_losses(batch, cls_);
    const double own = member_ ? losses[*member_] : batch_loss(batch, played);
    return {own, std::move(losses)};
  }

  /// Returns the Hedge learning rate when one was used.
  template <class Example>
  std::optional<double> update(const std::vector<Example>& batch, const Vec& member_losses,
                               int num_actions) {
    switch (cfg_.kind) {
      case LearnerKind::kFtl:
        for (std::size_t k = 0; k < totals_.size(); ++k) totals_[k] += member_losses[k];
        return std::nullopt;
      case LearnerKind::kHedge: {
        for (double l : member_losses) observed_range_ = std::max(observed_range_, l);
        double eta = cfg_.eta;
        if (!(eta > 0.0)) {
          const double range = observed_range_ > 0.0 ? observed_range_ : 1.0;
          eta = hedge_default_eta(cls_.size(), options_.iterations, range);
        }
        cls_.weights = hedge_update(cls_, member_losses, eta);
        return eta;
      }
      case LearnerKind::kOgdRegression:
        reg_ = ogd_regression_update(reg_, regression_targets(batch, num_actions), cfg_.step_size)
                   .updated;
        return std::nullopt;
      case LearnerKind::kBatchRegression: {
        auto targets = regression_targets(batch, num_actions);
        all_targets_.insert(all_targets_.end(), targets.begin(), targets.end());
        reg_ = fit_ridge(features_, all_targets_, kLeastSquaresRidge);
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

 private:
  LearnerConfig cfg_;
  RunOptions options_;
  std::optional<Policy> initial_;
  FeatureMap features_;
  FinitePolicyClass cls_;
  LinearQRegressor reg_;
  Vec totals_;
  double observed_range_ = 0.0;
  std::optional<std::size_t> member_;
  std::vector<CostToGoExample> all_targets_;
};

/// collect(i, play) returns the batch for round i.
template <class Example>
RunReport run_loop(
    const MdpSpec& spec, const LearnerConfig& cfg, const RunOptions& options,
    std::optional<Policy> initial, std::string algorithm,
    const std::function<std::vector<Example>(int, const Policy&, double)>& collect) {
  require_valid(spec);
  require_run_options(options);
  OnlineLearner learner(spec, cfg, options, std::move(initial));
  RunReport report;
  report.algorithm = std::move(algorithm);
  report.learner = cfg.kind;
  report.horizon = spec.horizon;
  report.samples = options.samples;
  report.schedule = options.schedule;
  report.seed = options.seed;

  for (int i = 1; i <= options.iterations; ++i) {
    IterationRecord rec;
    rec.iteration = i;
    rec.beta = options.schedule.beta(i);
    const Policy play = learner.play(i);
    require_compatible(spec, play);
    rec.member = learner.member();
    if (options.oracle) rec.exact_j = policy_value(spec, play);
    if (!learner.finite_class()) report.regressors.push_back(learner.regressor());

    auto batch = collect(i, play, rec.beta);
    auto [own, losses] = learner.round_losses(batch, play, spec.num_actions);
    rec.round_loss = own;
    rec.eta = learner.update(batch, losses, spec.num_actions);
    rec.member_losses = std::move(losses);
    store(report, std::move(batch));
    report.policies.push_back(play);
    report.iterations.push_back(std::move(rec));
  }
  report.final_policy = learner.play(options.iterations + 1);
  if (learner.finite_class()) report.policy_class = learner.policy_class();
  report.best_index =
      select_best_on_validation(report.policies, spec, options.validation, options.seed);
  return report;
}

BatchRng batch_rng(const RunOptions& o, int i) {
  return {o.seed, static_cast<std::uint64_t>(i), o.workers};
}

}  // namespace

RunReport run_aggrevate(const MdpSpec& spec, const Policy& expert, const LearnerConfig& learner,
                        const RunOptions& options) {
  require_compatible(spec, expert);
  return run_loop<CostToGoExample>(
      spec, learner, options, std::nullopt, "aggrevate",
      [&](int i, const Policy& play, double beta) {
        return collect_aggrevate_batch(spec, play, expert, beta, options.samples,
                                       batch_rng(options, i));
      });
}

RunReport run_nrpi(const MdpSpec& spec, const Exploration& exploration,
                   const LearnerConfig& learner, const Policy& initial, const RunOptions& options) {
  require_compatible(spec, initial);
  if (const auto* pi = std::get_if<Policy>(&exploration)) require_compatible(spec, *pi);
  RunOptions nrpi_options = options;
  nrpi_options.schedule = BetaSchedule{1.0};
  return run_loop<CostToGoExample>(
      spec, learner, nrpi_options, initial, "nrpi", [&](int i, const Policy& play, double) {
        return collect_nrpi_batch(spec, play, exploration, options.samples,
                                  batch_rng(options, i));
      });
}

RunReport dagger_classification(const MdpSpec& spec, const Policy& expert,
                                 const LearnerConfig& learner, const RunOptions& options) {
  require_compatible(spec, expert);
  return run_loop<ImitationExample>(
      spec, learner, options, std::nullopt, "dagger_classification",
      [&](int i, const Policy& play, double beta) {
        return collect_imitation_batch(spec, play, expert, beta, options.samples,
                                       batch_rng(options, i));
      });
}

Policy behavior_cloning(const MdpSpec& spec, const Policy& expert, const LearnerConfig& learner,
                        const RunOptions& options) {
  require_valid(spec);
  require_run_options(options);
  require_compatible(spec, expert);
  if (learner.kind == LearnerKind::kHedge || learner.kind == LearnerKind::kOgdRegression) {
    throw IncompatibleLearner("behavior cloning is a batch method: use ftl or batch_regression");
  }
  const int total = options.iterations * options.samples;
  const auto batch = collect_imitation_batch(spec, expert, expert, 1.0, total,
                                             BatchRng{options.seed, 0, options.workers});
  if (learner.kind == LearnerKind::kFtl) {
    const auto& cls = require_class(learner, spec);
    ImitationDataset data;
    data.append(batch);
    return cls.members[ftl_select_zero_one(data, cls).index];
  }
  const FeatureMap features{learner.features, spec.num_states, spec.num_actions, spec.horizon};
  return Policy::linear_argmin(
      fit_ridge(features, indicator_targets(batch, spec.num_actions), kLeastSquaresRidge));
}

double estimate_policy_value(const MdpSpec& spec, const Policy& pi, int budget,
                             std::uint64_t seed, std::uint64_t candidate) {
  if (budget < 1) throw std::invalid_argument("validation budget must be at least 1");
  double total = 0.0;
  for (int j = 0; j < budget; ++j) {
    RngStream rng(seed, {candidate, Lane::kValidation, static_cast<std::uint64_t>(j)});
    for (const auto& step : sample_trajectory(spec, pi, rng)) total += step.cost;
  }
  return total / budget;
}

std::size_t select_best_on_validation(const std::vector<Policy>& policies, const MdpSpec& spec,
                                      const ValidationConfig& config, std::uint64_t seed) {
  if (policies.empty()) throw std::invalid_argument("no policies to validate");
  if (!config.oracle && config.budget < 1) {
    throw std::invalid_argument("validation budget must be at least 1");
  }
  Vec values;
  values.reserve(policies.size());
  for (std::size_t k = 0; k < policies.size(); ++k) {
    values.push_back(config.oracle ? policy_value(spec, policies[k])
                                   : estimate_policy_value(spec, policies[k], config.budget, seed,
                                                           static_cast<std::uint64_t>(k)));
  }
  return static_cast<std::size_t>(argmin_action(values));
}

double exact_online_loss(const StateDistSchedule& d, const QTables& q, const Policy& pi) {
  const int T = d.horizon();
  if (q.horizon() != T) throw DimensionError("exact_online_loss: horizons differ");
  double total = 0.0;
  for (int t = 1; t <= T; ++t) {
    const auto& dt = d.per_time[static_cast<std::size_t>(t - 1)];
    for (std::size_t s = 0; s < dt.size(); ++s) {
      if (dt[s] == 0.0) continue;
      total += dt[s] * q_of_policy(q, pi, static_cast<int>(s), t);
    }
  }
  return total / T;
}

double exact_min_loss(const StateDistSchedule& d, const QTables& q) {
  const int T = d.horizon();
  if (q.horizon() != T) throw DimensionError("exact_min_loss: horizons differ");
  double total = 0.0;
  for (int t = 1; t <= T; ++t) {
    const auto& dt = d.per_time[static_cast<std::size_t>(t - 1)];
    for (std::size_t s = 0; s < dt.size(); ++s) {
      if (dt[s] == 0.0) continue;
      const Vec& row = q.at_time(t, static_cast<int>(s));
      total += dt[s] * *std::min_element(row.begin(), row.end());
    }
  }
  return total / T;
}

namespace {

void require_oracle_inputs(const RunReport& report, const MdpSpec& spec) {
  if (report.policies.empty()) throw std::invalid_argument("run report holds no policies");
  if (report.horizon != spec.horizon) throw DimensionError("report horizon differs from the MDP");
  for (const auto& p : report.policies) {
    require_compatible(spec, p);
    if (!p.is_markov()) throw std::invalid_argument("bound checks need Markov iterates");
  }
}

double mean_value(const MdpSpec& spec, const RunReport& report,
                  const std::optional<Vec>& recorded_j) {
  const std::size_t n = report.policies.size();
  if (recorded_j && recorded_j->size() != n) {
    throw DimensionError("one recorded J per iterate expected");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += recorded_j ? (*recorded_j)[i] : policy_value(spec, report.policies[i]);
  }
  return total / static_cast<double>(n);
}

double max_cost(const MdpSpec& spec) {
  double c = 0.0;
  for (const auto& row : spec.costs) c = std::max(c, *std::max_element(row.begin(), row.end()));
  return c;
}

}  // namespace

Theorem1Check theorem1_check(const RunReport& report, const MdpSpec& spec, const Policy& expert,
                             const FinitePolicyClass& cls, const std::optional<Vec>& recorded_j) {
  require_oracle_inputs(report, spec);
  require_compatible(spec, expert);
  if (cls.members.empty()) throw std::invalid_argument("theorem1_check: empty class");
  for (const auto& m : cls.members) require_compatible(spec, m);
  const int T = spec.horizon;
  const int N = static_cast<int>(report.policies.size());
  const QTables q_star = exact_q(spec, expert);

  Vec member_totals(cls.size(), 0.0);
  double learner_total = 0.0;
  double min_total = 0.0;
  for (int i = 0; i < N; ++i) {
    const Policy& played = report.policies[static_cast<std::size_t>(i)];
    const double beta = report.schedule.beta(i + 1);
    const auto d = exact_state_distributions(spec, Policy::step_mixture(played, expert, beta));
    learner_total += exact_online_loss(d, q_star, played);
    min_total += exact_min_loss(d, q_star);
    for (std::size_t k = 0; k < cls.size(); ++k) {
      member_totals[k] += exact_online_loss(d, q_star, cls.members[k]);
    }
  }
  const double best_total = *std::min_element(member_totals.begin(), member_totals.end());

  Theorem1Check out;
  out.eps_regret = (learner_total - best_total) / N;
  out.eps_class = (best_total - min_total) / N;
  out.q_star_max = q_star.max_value();
  out.n_beta = report.schedule.n_beta(T, N);
  out.remainder = 2.0 * T * out.q_star_max / N * report.schedule.remainder_factor(T, N);
  out.j_expert = policy_value(spec, expert);
  out.j_mixture = mean_value(spec, report, recorded_j);
  out.lhs = out.j_mixture - out.j_expert;
  out.rhs = T * (out.eps_class + out.eps_regret) + out.remainder;
  out.holds = out.lhs <= out.rhs + kValidationTol;
  return out;
}

Theorem2Diagnostics theorem2_diagnostics(const RunReport& report, const MdpSpec& spec,
                                         const Policy& expert, double delta,
                                         const std::optional<Vec>& recorded_j) {
  if (!is_regression(report.learner)) {
    throw std::invalid_argument("theorem2_diagnostics needs a regression-mode run");
  }
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0,1]");
  require_oracle_inputs(report, spec);
  const std::size_t N = report.regressors.size();
  if (N == 0 || N != report.data.num_rounds() || N != report.policies.size()) {
    throw DimensionError("theorem2_diagnostics: regressors, rounds and iterates disagree");
  }
  const int T = spec.horizon;
  const int A = spec.num_actions;
  const FeatureMap& features = report.regressors.front().features;
  const auto all = report.data.flattened();

  Theorem2Diagnostics out;
  out.delta = delta;
  double learner_total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    learner_total += squared_loss(report.regressors[i], report.data.rounds()[i]);
  }
  out.learner_avg_loss = learner_total / static_cast<double>(N);

  const auto best = fit_ridge(features, all, kLeastSquaresRidge);
  out.best_in_class_loss = squared_loss(best, all);

  std::map<std::tuple<int, int, int>, std::pair<double, int>> cells;
  for (const auto& ex : all) {
    auto& c = cells[{ex.state, ex.action, ex.time}];
    c.first += ex.q_estimate;
    c.second += 1;
  }
  double tilde = 0.0;
  for (const auto& ex : all) {
    const auto& c = cells.at({ex.state, ex.action, ex.time});
    const double r = ex.q_estimate - c.first / c.second;
    tilde += r * r;
  }
  out.cell_mean_loss = tilde / static_cast<double>(all.size());

  // Total loss is a mean over equal-sized rounds, so averaging round losses
  // equals the loss on the aggregate.
  out.eps_regret_hat = out.learner_avg_loss - out.best_in_class_loss;
  out.eps_class_hat = out.best_in_class_loss - out.cell_mean_loss;

  const double q_cap = T * max_cost(spec);
  double worst = q_cap;
  for (const auto& reg : report.regressors) {
    for (int s = 0; s < spec.num_states; ++s) {
      for (int a = 0; a < A; ++a) {
        for (int t = 1; t <= T; ++t) {
          const double p = reg.predict(s, a, t);
          worst = std::max({worst, std::abs(p), std::abs(p - q_cap)});
        }
      }
    }
  }
  out.loss_max = worst * worst;
  const double nm = static_cast<double>(all.size());
  out.concentration = 2.0 * out.loss_max * std::sqrt(2.0 * std::log(1.0 / delta) / nm);

  const QTables q_star = exact_q(spec, expert);
  const int n = static_cast<int>(N);
  out.remainder = 2.0 * T * q_star.max_value() / n * report.schedule.remainder_factor(T, n);
  const double inner = std::max(0.0, out.eps_class_hat + out.eps_regret_hat + out.concentration);
  out.rhs = 2.0 * std::sqrt(static_cast<double>(A)) * T * std::sqrt(inner) + out.remainder;
  out.lhs = mean_value(spec, report, recorded_j) - policy_value(spec, expert);
  out.holds = out.lhs <= out.rhs + kValidationTol;
  return out;
}

StateDistSchedule exploration_schedule(const MdpSpec& spec, const Exploration& exploration) {
  if (const auto* s = std::get_if<StateDistSchedule>(&exploration)) {
    if (s->horizon() != spec.horizon) throw DimensionError("exploration horizon differs");
    return *s;
  }
  return exact_state_distributions(spec, std::get<Policy>(exploration));
}

double exploration_distance(const MdpSpec& spec, const StateDistSchedule& nu, const Policy& pi) {
  if (nu.horizon() != spec.horizon) throw DimensionError("exploration horizon differs");
  const Vec per_time = l1_distance(nu, exact_state_distributions(spec, pi));
  return std::accumulate(per_time.begin(), per_time.end(), 0.0) / spec.horizon;
}

Theorem3Check theorem3_check(const RunReport& report, const MdpSpec& spec,
                             const Policy& comparator, const StateDistSchedule& exploration,
                             const FinitePolicyClass& cls, const std::optional<Vec>& recorded_j) {
  require_oracle_inputs(report, spec);
  require_compatible(spec, comparator);
  if (exploration.horizon() != spec.horizon) throw DimensionError("exploration horizon differs");
  if (cls.members.empty()) throw std::invalid_argument("theorem3_check: empty class");
  const int T = spec.horizon;
  const int N = static_cast<int>(report.policies.size());

  Vec member_totals(cls.size(), 0.0);
  double learner_total = 0.0;
  double q_max = 0.0;
  for (const auto& played : report.policies) {
    const QTables q = exact_q(spec, played);
    q_max = std::max(q_max, q.max_value());
    learner_total += exact_online_loss(exploration, q, played);
    for (std::size_t k = 0; k < cls.size(); ++k) {
      member_totals[k] += exact_online_loss(exploration, q, cls.members[k]);
    }
  }
  const double best_total = *std::min_element(member_totals.begin(), member_totals.end());

  Theorem3Check out;
  out.eps_regret = (learner_total - best_total) / N;
  out.q_max = std::min(q_max, static_cast<double>(T));
  out.distance = exploration_distance(spec, exploration, comparator);
  out.j_comparator = policy_value(spec, comparator);
  out.j_mixture = mean_value(spec, report, recorded_j);
  out.lhs = out.j_mixture - out.j_comparator;
  out.rhs = T * out.eps_regret + T * out.q_max * out.distance;
  out.holds = out.lhs <= out.rhs + kValidationTol;
  return out;
}

}  // namespace aggrevate
