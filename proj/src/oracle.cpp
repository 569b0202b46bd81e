#include "aggrevate/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace aggrevate {

namespace {

void require_markov(const Policy& pi, const char* what) {
  if (!pi.is_markov()) {
    throw std::invalid_argument(std::string(what) +
                                " needs a Markov policy; trajectory mixtures have no per-step Q");
  }
}

Vec propagate(const MdpSpec& spec, const Policy& pi, const Vec& d, int t) {
  Vec next(static_cast<std::size_t>(spec.num_states), 0.0);
  for (int s = 0; s < spec.num_states; ++s) {
    if (d[s] == 0.0) continue;
    const Vec act = pi.action_distribution(s, t);
    for (int a = 0; a < spec.num_actions; ++a) {
      const double w = d[s] * act[a];
      if (w == 0.0) continue;
      const Vec& row = spec.transitions[s][a];
      for (int s2 = 0; s2 < spec.num_states; ++s2) next[s2] += w * row[s2];
    }
  }
  return next;
}

}  // namespace

StateDistSchedule StateDistSchedule::from_per_time(Mat per_time) {
  StateDistSchedule out;
  out.averaged.assign(per_time.empty() ? 0 : per_time.front().size(), 0.0);
  for (const auto& d : per_time) {
    if (d.size() != out.averaged.size()) throw DimensionError("ragged state schedule");
    for (std::size_t s = 0; s < d.size(); ++s) out.averaged[s] += d[s];
  }
  for (double& x : out.averaged) x /= static_cast<double>(per_time.size());
  out.per_time = std::move(per_time);
  return out;
}

double QTables::max_value() const {
  double m = 0.0;
  for (const auto& layer : q) {
    for (const auto& row : layer) {
      for (double x : row) m = std::max(m, x);
    }
  }
  return m;
}

StateDistSchedule exact_state_distributions(const MdpSpec& spec, const Policy& pi) {
  require_compatible(spec, pi);
  if (pi.kind() == Policy::Kind::kTrajectoryMixture) {
    const auto& members = pi.members();
    Mat per_time(static_cast<std::size_t>(spec.horizon),
                 Vec(static_cast<std::size_t>(spec.num_states), 0.0));
    for (const auto& m : members) {
      const auto d = exact_state_distributions(spec, m);
      for (int t = 0; t < spec.horizon; ++t) {
        for (int s = 0; s < spec.num_states; ++s) per_time[t][s] += d.per_time[t][s];
      }
    }
    for (auto& d : per_time) {
      for (double& x : d) x /= static_cast<double>(members.size());
    }
    return StateDistSchedule::from_per_time(std::move(per_time));
  }
  require_markov(pi, "exact_state_distributions");
  Mat per_time;
  per_time.reserve(static_cast<std::size_t>(spec.horizon));
  per_time.push_back(spec.initial_dist);
  for (int t = 1; t < spec.horizon; ++t) {
    per_time.push_back(propagate(spec, pi, per_time.back(), t));
  }
  return StateDistSchedule::from_per_time(std::move(per_time));
}

QTables exact_q(const MdpSpec& spec, const Policy& pi) {
  require_compatible(spec, pi);
  require_markov(pi, "exact_q");
  const auto S = static_cast<std::size_t>(spec.num_states);
  const auto A = static_cast<std::size_t>(spec.num_actions);
  const int T = spec.horizon;
  QTables out;
  out.q.assign(static_cast<std::size_t>(T) + 1, Mat(S, Vec(A, 0.0)));
  out.v.assign(static_cast<std::size_t>(T) + 1, Vec(S, 0.0));
  for (int k = 1; k <= T; ++k) {
    const int t = T - k + 1;  // the only place steps-remaining meets wall-clock time
    const Vec& v_next = out.v[k - 1];
    for (int s = 0; s < spec.num_states; ++s) {
      for (int a = 0; a < spec.num_actions; ++a) {
        double q = spec.costs[s][a];
        const Vec& row = spec.transitions[s][a];
        for (std::size_t s2 = 0; s2 < S; ++s2) q += row[s2] * v_next[s2];
        out.q[k][s][a] = q;
      }
      const Vec act = pi.action_distribution(s, t);
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) v += act[a] * out.q[k][s][a];
      out.v[k][s] = v;
    }
  }
  return out;
}

double q_of_policy(const QTables& q, const Policy& pi, int s, int t) {
  const Vec act = pi.action_distribution(s, t);
  const Vec& qs = q.at_time(t, s);
  double out = 0.0;
  for (std::size_t a = 0; a < act.size(); ++a) out += act[a] * qs[a];
  return out;
}

double policy_value(const MdpSpec& spec, const Policy& pi) {
  require_compatible(spec, pi);
  if (pi.kind() == Policy::Kind::kTrajectoryMixture) {
    double total = 0.0;
    for (const auto& m : pi.members()) total += policy_value(spec, m);
    return total / static_cast<double>(pi.members().size());
  }
  const auto d = exact_state_distributions(spec, pi);
  double j = 0.0;
  for (int t = 1; t <= spec.horizon; ++t) {
    const Vec& dt = d.per_time[t - 1];
    for (int s = 0; s < spec.num_states; ++s) {
      if (dt[s] == 0.0) continue;
      const Vec act = pi.action_distribution(s, t);
      for (int a = 0; a < spec.num_actions; ++a) j += dt[s] * act[a] * spec.costs[s][a];
    }
  }
  const auto q = exact_q(spec, pi);
  double j_backward = 0.0;
  for (int s = 0; s < spec.num_states; ++s) {
    j_backward += spec.initial_dist[s] * q.v[static_cast<std::size_t>(spec.horizon)][s];
  }
  if (std::abs(j - j_backward) > kValidationTol) {
    throw std::logic_error("forward and backward policy values disagree");
  }
  return j;
}

PerformanceDifference performance_difference(const MdpSpec& spec, const Policy& pi,
                                             const Policy& pi_prime) {
  require_markov(pi, "performance_difference");
  require_markov(pi_prime, "performance_difference");
  const auto q = exact_q(spec, pi);
  const auto q_prime = exact_q(spec, pi_prime);
  const auto d = exact_state_distributions(spec, pi);
  const auto d_prime = exact_state_distributions(spec, pi_prime);
  const int T = spec.horizon;

  PerformanceDifference out;
  double j = 0.0, j_prime = 0.0;
  for (int s = 0; s < spec.num_states; ++s) {
    j += spec.initial_dist[s] * q.v[T][s];
    j_prime += spec.initial_dist[s] * q_prime.v[T][s];
  }
  out.lhs = j - j_prime;

  // T * E_{t ~ U(1:T)}[...] collapses to a plain sum over t.
  for (int t = 1; t <= T; ++t) {
    const int k = T - t + 1;
    for (int s = 0; s < spec.num_states; ++s) {
      const double w1 = d.per_time[t - 1][s];
      if (w1 != 0.0) {
        out.rhs_form1 += w1 * (q_of_policy(q_prime, pi, s, t) - q_prime.v[k][s]);
      }
      const double w2 = d_prime.per_time[t - 1][s];
      if (w2 != 0.0) {
        out.rhs_form2 += w2 * (q.v[k][s] - q_of_policy(q, pi_prime, s, t));
      }
    }
  }
  return out;
}

double l1_distance(const Vec& p, const Vec& q) {
  if (p.size() != q.size()) throw DimensionError("l1_distance: vectors differ in length");
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) out += std::abs(p[i] - q[i]);
  return out;
}

Vec l1_distance(const StateDistSchedule& p, const StateDistSchedule& q) {
  if (p.per_time.size() != q.per_time.size()) {
    throw DimensionError("l1_distance: schedules differ in horizon");
  }
  Vec out;
  out.reserve(p.per_time.size());
  for (std::size_t t = 0; t < p.per_time.size(); ++t) {
    out.push_back(l1_distance(p.per_time[t], q.per_time[t]));
  }
  return out;
}

BoundCheck expectation_gap_bound_check(const Vec& p, const Vec& q, const Vec& f, double lo,
                                       double hi) {
  if (f.size() != p.size()) throw DimensionError("expectation_gap_bound_check: f has wrong size");
  if (!(lo <= hi)) throw std::invalid_argument("expectation_gap_bound_check: empty range");
  for (double x : f) {
    if (!(x >= lo && x <= hi)) {
      throw std::invalid_argument("expectation_gap_bound_check: f outside declared range");
    }
  }
  double ep = 0.0, eq = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    ep += p[i] * f[i];
    eq += q[i] * f[i];
  }
  BoundCheck out;
  out.lhs = std::abs(ep - eq);
  out.bound = 0.5 * (hi - lo) * l1_distance(p, q);
  out.holds = out.lhs <= out.bound + kIdentityTol;
  return out;
}

BoundCheck mixing_l1_bound_check(const MdpSpec& spec, const Policy& expert, const Policy& learner,
                                 double beta) {
  const auto mix = Policy::step_mixture(learner, expert, beta);
  const auto d_mix = exact_state_distributions(spec, mix);
  const auto d_learner = exact_state_distributions(spec, learner);
  BoundCheck out;
  out.lhs = l1_distance(d_mix.averaged, d_learner.averaged);
  out.bound = 2.0 * std::min(1.0, spec.horizon * beta);
  out.holds = out.lhs <= out.bound + kValidationTol;
  return out;
}

OptimalSolution finite_horizon_optimal_policy(const MdpSpec& spec) {
  require_valid(spec);
  const auto S = static_cast<std::size_t>(spec.num_states);
  const auto A = static_cast<std::size_t>(spec.num_actions);
  const int T = spec.horizon;
  QTables out;
  out.q.assign(static_cast<std::size_t>(T) + 1, Mat(S, Vec(A, 0.0)));
  out.v.assign(static_cast<std::size_t>(T) + 1, Vec(S, 0.0));
  std::vector<std::vector<int>> actions(S, std::vector<int>(static_cast<std::size_t>(T), 0));
  for (int k = 1; k <= T; ++k) {
    const int t = T - k + 1;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        double q = spec.costs[s][a];
        const Vec& row = spec.transitions[s][a];
        for (std::size_t s2 = 0; s2 < S; ++s2) q += row[s2] * out.v[k - 1][s2];
        out.q[k][s][a] = q;
      }
      const int best = argmin_action(out.q[k][s]);
      actions[s][t - 1] = best;
      out.v[k][s] = out.q[k][s][best];
    }
  }
  return {Policy::tabular(std::move(actions), spec.num_actions), std::move(out)};
}

}  // namespace aggrevate
