#pragma once

#include <vector>

#include "aggrevate/mdp.hpp"
#include "aggrevate/policy.hpp"

namespace aggrevate {

/// Per-time state distributions d^t (t = 1..T stored at index t-1) and their
/// time average.
struct StateDistSchedule {
  Mat per_time;
  Vec averaged;

  int horizon() const { return static_cast<int>(per_time.size()); }
  /// Builds the schedule from per-time vectors, computing the average.
  static StateDistSchedule from_per_time(Mat per_time);
};

/// Cost-to-go tables indexed by steps remaining k = 1..T. Index 0 holds the
/// all-zero "no steps left" layer so that k - 1 lookups need no special case.
struct QTables {
  std::vector<Mat> q;  // q[k][s][a]
  Mat v;               // v[k][s]

  int horizon() const { return static_cast<int>(q.size()) - 1; }
  /// Q at wall-clock time t of a horizon-T problem, i.e. k = T - t + 1.
  const Vec& at_time(int t, int s) const { return q[static_cast<std::size_t>(horizon() - t + 1)][s]; }
  double max_value() const;
};

StateDistSchedule exact_state_distributions(const MdpSpec& spec, const Policy& pi);

/// Requires a Markov policy (no trajectory mixtures).
QTables exact_q(const MdpSpec& spec, const Policy& pi);

/// Total expected cost J. Trajectory mixtures evaluate to the mean of their
/// members. For Markov policies the state-distribution sum is cross-checked
/// against the initial-state expectation of V[T].
double policy_value(const MdpSpec& spec, const Policy& pi);

/// Expected Q under the policy's action distribution at (s, t).
double q_of_policy(const QTables& q, const Policy& pi, int s, int t);

struct PerformanceDifference {
  double lhs = 0.0;        // J(pi) - J(pi')
  double rhs_form1 = 0.0;  // advantage of pi under Q of pi', along d_pi
  double rhs_form2 = 0.0;  // disadvantage of pi' under Q of pi, along d_pi'
};

PerformanceDifference performance_difference(const MdpSpec& spec, const Policy& pi,
                                             const Policy& pi_prime);

double l1_distance(const Vec& p, const Vec& q);
/// One L1 distance per time step.
Vec l1_distance(const StateDistSchedule& p, const StateDistSchedule& q);

struct BoundCheck {
  double lhs = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// |E_p f - E_q f| against (range/2) * ||p - q||_1 for f with values in
/// [lo, hi]. Throws std::invalid_argument when f leaves the declared range.
BoundCheck expectation_gap_bound_check(const Vec& p, const Vec& q, const Vec& f, double lo,
                                       double hi);

/// ||d_mix - d_learner||_1 on time-averaged distributions against
/// 2 min(1, T beta), where mix plays the expert with probability beta per step.
BoundCheck mixing_l1_bound_check(const MdpSpec& spec, const Policy& expert, const Policy& learner,
                                 double beta);

struct OptimalSolution {
  Policy policy;
  QTables q;
};

/// Backward induction; ties broken towards the lowest action index.
OptimalSolution finite_horizon_optimal_policy(const MdpSpec& spec);

}  // namespace aggrevate
