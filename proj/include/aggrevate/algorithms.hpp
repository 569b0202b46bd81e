#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggrevate/features.hpp"
#include "aggrevate/learners.hpp"
#include "aggrevate/mdp.hpp"
#include "aggrevate/oracle.hpp"
#include "aggrevate/policy.hpp"
#include "aggrevate/sampling.hpp"

namespace aggrevate {

/// beta_i = (1 - alpha)^(i-1) with 0^0 = 1.
struct BetaSchedule {
  double alpha = 1.0;

  double beta(int i) const;
  /// Largest n <= N with beta_n > 1/T, or 0.
  int n_beta(int horizon, int num_iterations) const;
  /// n_beta + T * sum_{i > n_beta}^N beta_i.
  double remainder_factor(int horizon, int num_iterations) const;
};

enum class LearnerKind { kFtl, kHedge, kOgdRegression, kBatchRegression };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);
bool is_regression(LearnerKind kind);

/// Raised when a learner cannot serve the requested algorithm (for example
/// Hedge without a finite policy class).
class IncompatibleLearner : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kFtl;
  std::optional<FinitePolicyClass> policy_class;
  FeatureKind features = FeatureKind::kStateActionPlusTime;
  /// Hedge learning rate; 0 selects sqrt(8 ln K / N) over the observed loss range.
  double eta = 0.0;
  double step_size = 0.5;
};

struct ValidationConfig {
  bool oracle = true;
  /// Monte-Carlo trajectories per candidate when the oracle is off.
  int budget = 1000;
};

struct RunOptions {
  int iterations = 10;  // N
  int samples = 100;    // m
  BetaSchedule schedule;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Record exact J of every iterate.
  bool oracle = true;
  ValidationConfig validation;
};

struct IterationRecord {
  int iteration = 1;
  double beta = 0.0;
  /// Empirical loss of the learner's play on this round's batch.
  double round_loss = 0.0;
  std::optional<double> exact_j;
  /// Finite-class learners: the member played and every member's batch loss.
  std::optional<std::size_t> member;
  Vec member_losses;
  /// Hedge learning rate used for the update after this round.
  std::optional<double> eta;
};

struct RunReport {
  std::string algorithm;
  LearnerKind learner = LearnerKind::kFtl;
  int horizon = 0;
  int samples = 0;
  BetaSchedule schedule;
  std::uint64_t seed = 0;

  std::vector<IterationRecord> iterations;
  std::vector<Policy> policies;  // pi_hat_1 .. pi_hat_N
  std::optional<Policy> final_policy;  // pi_hat_{N+1}
  std::vector<LinearQRegressor> regressors;  // regression learners: Q_hat^1 .. Q_hat^N
  AggregatedDataset data;
  ImitationDataset imitation_data;
  std::optional<FinitePolicyClass> policy_class;  // final Hedge weights when applicable
  std::size_t best_index = 0;

  int num_iterations() const { return static_cast<int>(iterations.size()); }
  /// Uniform trajectory mixture over pi_hat_1 .. pi_hat_N.
  Policy mixture() const;
  const Policy& best_policy() const { return policies.at(best_index); }
};

/// AggreVaTe. The expert's continuation supplies the cost-to-go labels.
RunReport run_aggrevate(const MdpSpec& spec, const Policy& expert, const LearnerConfig& learner,
                        const RunOptions& options);

/// NRPI. The current policy's continuation supplies the labels; states
/// come from the exploration schedule or by executing an exploration policy.
RunReport run_nrpi(const MdpSpec& spec, const Exploration& exploration,
                   const LearnerConfig& learner, const Policy& initial, const RunOptions& options);

/// Supervised imitation on expert-visited states using samples * iterations
/// examples in total. Finite classes minimize 0-1 loss; regression learners
/// fit indicator targets and act greedily.
Policy behavior_cloning(const MdpSpec& spec, const Policy& expert, const LearnerConfig& learner,
                        const RunOptions& options);

/// Same loop shape and budget as run_aggrevate, labelled with expert actions
/// and trained on 0-1 loss.
RunReport dagger_classification(const MdpSpec& spec, const Policy& expert,
                                 const LearnerConfig& learner, const RunOptions& options);

/// Index of the lowest J (exact or Monte-Carlo); earliest index on ties.
std::size_t select_best_on_validation(const std::vector<Policy>& policies, const MdpSpec& spec,
                                      const ValidationConfig& config, std::uint64_t seed);

/// Monte-Carlo estimate of J from `budget` trajectories on the validation lane.
double estimate_policy_value(const MdpSpec& spec, const Policy& pi, int budget,
                             std::uint64_t seed, std::uint64_t candidate);

// Exact online losses -------------------------------------------------------

/// E_{t~U(1:T), s~d^t}[Q_{T-t+1}(s, pi)] for a state schedule d and Q tables.
double exact_online_loss(const StateDistSchedule& d, const QTables& q, const Policy& pi);
/// E_{t~U(1:T), s~d^t}[min_a Q_{T-t+1}(s, a)].
double exact_min_loss(const StateDistSchedule& d, const QTables& q);

// Bound diagnostics -----------------------------------------------------------

struct Theorem1Check {
  double lhs = 0.0;  // J(pi_bar) - J(expert)
  double rhs = 0.0;
  double eps_class = 0.0;
  double eps_regret = 0.0;
  double q_star_max = 0.0;
  int n_beta = 0;
  double remainder = 0.0;  // (2 T Q*_max / N) * remainder_factor
  double j_mixture = 0.0;
  double j_expert = 0.0;
  bool holds = false;
  double margin() const { return rhs - lhs; }
};

/// Oracle-exact check over the class the learner competed against. J(pi_bar)
/// is recomputed unless `recorded_j` supplies one value per iterate.
Theorem1Check theorem1_check(const RunReport& report, const MdpSpec& spec, const Policy& expert,
                             const FinitePolicyClass& cls,
                             const std::optional<Vec>& recorded_j = std::nullopt);

struct Theorem2Diagnostics {
  double lhs = 0.0;
  double rhs = 0.0;
  double eps_class_hat = 0.0;
  double eps_regret_hat = 0.0;
  double concentration = 0.0;  // 2 l_max sqrt(2 ln(1/delta) / (N m))
  double loss_max = 0.0;
  double learner_avg_loss = 0.0;
  double best_in_class_loss = 0.0;
  double cell_mean_loss = 0.0;
  double remainder = 0.0;
  double delta = 0.1;
  bool holds = false;
  double margin() const { return rhs - lhs; }
};

Theorem2Diagnostics theorem2_diagnostics(const RunReport& report, const MdpSpec& spec,
                                         const Policy& expert, double delta,
                                         const std::optional<Vec>& recorded_j = std::nullopt);

struct Theorem3Check {
  double lhs = 0.0;  // J(pi_bar) - J(comparator)
  double rhs = 0.0;
  double eps_regret = 0.0;
  double q_max = 0.0;
  double distance = 0.0;  // D(nu, comparator)
  double j_mixture = 0.0;
  double j_comparator = 0.0;
  bool holds = false;
  double margin() const { return rhs - lhs; }
};

Theorem3Check theorem3_check(const RunReport& report, const MdpSpec& spec,
                             const Policy& comparator, const StateDistSchedule& exploration,
                             const FinitePolicyClass& cls,
                             const std::optional<Vec>& recorded_j = std::nullopt);

/// D(nu, pi) = (1/T) sum_t ||nu_t - d^t_pi||_1.
double exploration_distance(const MdpSpec& spec, const StateDistSchedule& nu, const Policy& pi);

/// Exploration schedule for an Exploration value (exact d^t of a policy).
StateDistSchedule exploration_schedule(const MdpSpec& spec, const Exploration& exploration);

}  // namespace aggrevate
