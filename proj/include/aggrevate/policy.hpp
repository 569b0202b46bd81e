#pragma once

#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aggrevate/features.hpp"
#include "aggrevate/mdp.hpp"

namespace aggrevate {

/// A (possibly randomized) policy over states and wall-clock time t in 1..T.
///
/// Policies are immutable values; copies share their underlying structure.
/// A trajectory mixture draws one member at the start of each trajectory and
/// follows it throughout, so it is not Markov in (s, t). Its
/// action_distribution() returns the member average, which matches the
/// trajectory marginal only at t = 1; exact evaluation code handles the
/// mixture through linearity instead.
class Policy {
 public:
  enum class Kind {
    kTabular,             // deterministic action[s][t]
    kStochastic,          // probs[t][s][a]
    kStepMixture,         // per-step coin flip between expert and base
    kTrajectoryMixture,   // uniform over members, drawn once per trajectory
    kLinearArgmin,        // argmin_a of a linear cost-to-go regressor
  };

  /// actions[s][t-1]
  static Policy tabular(std::vector<std::vector<int>> actions, int num_actions);
  /// Same action at every time step.
  static Policy stationary(const std::vector<int>& actions, int num_actions, int horizon);
  /// probs[t-1][s][a]
  static Policy stochastic(std::vector<Mat> probs);
  static Policy uniform_random(int num_states, int num_actions, int horizon);
  /// beta * expert + (1 - beta) * base at every (s, t).
  static Policy step_mixture(Policy base, Policy expert, double beta);
  static Policy trajectory_mixture(std::vector<Policy> members);
  static Policy linear_argmin(LinearQRegressor regressor);

  Kind kind() const;
  int num_states() const;
  int num_actions() const;
  int horizon() const;

  /// Probability vector over actions at state s and time t (1-based).
  Vec action_distribution(int s, int t) const;

  /// False when a trajectory mixture appears anywhere in the structure.
  bool is_markov() const;

  // Component access; each throws std::logic_error on the wrong kind.
  const std::vector<std::vector<int>>& tabular_actions() const;
  const std::vector<Mat>& stochastic_probs() const;
  const Policy& mixture_base() const;
  const Policy& mixture_expert() const;
  double mixture_beta() const;
  const std::vector<Policy>& members() const;
  const LinearQRegressor& regressor() const;

  /// Deterministic tabular view; requires a point mass at every (s, t).
  std::vector<std::vector<int>> greedy_table() const;

  struct Node;

 private:
  explicit Policy(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Throws DimensionError when the policy's dimensions differ from the spec's.
void require_compatible(const MdpSpec& spec, const Policy& pi);

/// Argmin over actions with lowest-index tie-break.
int argmin_action(const Vec& values);

nlohmann::json to_json(const Policy& pi);
Policy policy_from_json(const nlohmann::json& j);

}  // namespace aggrevate
