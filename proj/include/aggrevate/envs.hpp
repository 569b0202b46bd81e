#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "aggrevate/learners.hpp"
#include "aggrevate/mdp.hpp"
#include "aggrevate/policy.hpp"

namespace aggrevate {

/// Bumped whenever a canonical instance changes, so recorded acceptance
/// numbers can be tied to the geometry that produced them.
inline constexpr int kEnvironmentVersion = 1;

struct Environment {
  std::string name;
  MdpSpec spec;
  Policy expert;
  std::optional<FinitePolicyClass> policy_class;
};

// Cliff corridor ------------------------------------------------------------
//
// Grid of width x height cells; row 0 runs along the cliff. The agent starts
// at (row 0, column 0); every cell of the last column is an absorbing goal
// with zero cost. Stepping down from row 0 lands in an absorbing "fallen"
// state that costs 1 per step. With probability `slip` the executed move is
// drawn uniformly from all four moves. Cells on the edge row are cheaper than
// inner cells, so the optimal route hugs the cliff.

enum CliffAction : int { kRight = 0, kUp = 1, kDown = 2, kLeft = 3 };

struct CliffConfig {
  int width = 6;
  int height = 3;
  double slip = 0.1;
  int horizon = 10;
  double edge_cost = 0.1;
  double inner_cost = 0.5;
};

struct CliffLayout {
  int width = 0;
  int height = 0;
  int cell(int row, int col) const { return row * width + col; }
  int fallen() const { return width * height; }
  int num_states() const { return width * height + 1; }
  bool is_goal(int s) const { return s < fallen() && s % width == width - 1; }
  int row(int s) const { return s / width; }
  int col(int s) const { return s % width; }
};

/// Class members, in order: cliff-seeking, safe-detour, expert.
Environment make_cliff_corridor(const CliffConfig& config);

/// Steps down into the cliff from every open cell; after falling it keeps
/// "going straight" (action 0), exactly like the expert does there.
Policy cliff_seeking_policy(const CliffConfig& config);
/// Leaves the edge row immediately and drives right along inner rows.
Policy safe_detour_policy(const CliffConfig& config);
/// {cliff-seeking, safe-detour}: the class without the expert.
FinitePolicyClass cliff_imperfect_class(const CliffConfig& config);

// Two roads -------------------------------------------------------------------
//
// From the start state action 0 enters a short narrow road and action 1 a
// longer safe road. On the narrow road only action 1 keeps the car on the
// road; action 0 falls into an absorbing state costing 1 per step. Every step
// before reaching the goal costs `step_cost`.

struct TwoRoadConfig {
  int horizon = 8;
  int narrow_length = 2;
  int long_length = 5;
  double step_cost = 0.2;
};

struct TwoRoadLayout {
  int narrow_length = 0;
  int long_length = 0;
  int start() const { return 0; }
  int narrow(int j) const { return 1 + j; }
  int long_road(int j) const { return 1 + narrow_length + j; }
  int goal() const { return 1 + narrow_length + long_length; }
  int fallen() const { return goal() + 1; }
  int num_states() const { return goal() + 2; }
  bool on_narrow(int s) const { return s >= 1 && s <= narrow_length; }
};

/// Class members: {narrow-road policy playing 0 everywhere, long-road policy}.
/// No member reproduces the expert's narrow-road actions.
Environment make_two_road(const TwoRoadConfig& config);

// Random MDPs -----------------------------------------------------------------

struct RandomMdpConfig {
  int states = 5;
  int actions = 3;
  int horizon = 5;
  std::uint64_t seed = 0;
  /// Probability that a transition entry is forced to zero.
  double sparsity = 0.0;
  /// Number of random deterministic policies placed in front of the expert in
  /// the policy class.
  int class_size = 4;
};

/// Dirichlet(1) transitions and initial distribution, uniform costs in [0,1],
/// expert = optimal policy.
Environment make_random_mdp(const RandomMdpConfig& config);

Policy random_deterministic_policy(int states, int actions, int horizon, RngStream& rng);
Policy random_stochastic_policy(int states, int actions, int horizon, RngStream& rng);

// Config ------------------------------------------------------------------------

struct EnvConfig {
  std::string kind = "cliff_corridor";  // cliff_corridor | two_road | random
  CliffConfig cliff;
  TwoRoadConfig two_road;
  RandomMdpConfig random;
};

Environment make_environment(const EnvConfig& config);

/// Strict parse: unknown fields raise std::invalid_argument naming the field.
EnvConfig env_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EnvConfig& config);

}  // namespace aggrevate
