#pragma once

#include <functional>

#include "aggrevate/envs.hpp"
#include "aggrevate/mdp.hpp"
#include "aggrevate/policy.hpp"
#include "aggrevate/rng.hpp"

namespace testing_support {

using aggrevate::MdpSpec;
using aggrevate::Policy;

/// Two states, two actions, T = 3, start in state 0.
/// State 0: action 0 stays at cost 0.5, action 1 moves to state 1 at cost 1.
/// State 1 is absorbing with zero cost.
inline MdpSpec toll_road() {
  MdpSpec s;
  s.num_states = 2;
  s.num_actions = 2;
  s.horizon = 3;
  s.transitions = {{{1.0, 0.0}, {0.0, 1.0}}, {{0.0, 1.0}, {0.0, 1.0}}};
  s.costs = {{0.5, 1.0}, {0.0, 0.0}};
  s.initial_dist = {1.0, 0.0};
  return s;
}

/// J by brute-force expansion of every (action, next state) branch. Shares no
/// code with the dynamic-programming oracle.
inline double enumerate_value(const MdpSpec& spec, const Policy& pi) {
  std::function<double(int, int)> go = [&](int s, int t) -> double {
    if (t > spec.horizon) return 0.0;
    const auto act = pi.action_distribution(s, t);
    double total = 0.0;
    for (int a = 0; a < spec.num_actions; ++a) {
      if (act[a] == 0.0) continue;
      double branch = spec.costs[s][a];
      for (int s2 = 0; s2 < spec.num_states; ++s2) {
        const double p = spec.transitions[s][a][s2];
        if (p != 0.0) branch += p * go(s2, t + 1);
      }
      total += act[a] * branch;
    }
    return total;
  };
  double j = 0.0;
  for (int s = 0; s < spec.num_states; ++s) {
    if (spec.initial_dist[s] != 0.0) j += spec.initial_dist[s] * go(s, 1);
  }
  return j;
}

/// Small random MDP from the environment generator.
inline aggrevate::Environment small_random(std::uint64_t seed, int states = 4, int actions = 3,
                                           int horizon = 4) {
  aggrevate::RandomMdpConfig c;
  c.states = states;
  c.actions = actions;
  c.horizon = horizon;
  c.seed = seed;
  return aggrevate::make_random_mdp(c);
}

inline aggrevate::RngStream test_rng(std::uint64_t seed, std::uint64_t sample = 0) {
  return aggrevate::RngStream(seed, {0, aggrevate::Lane::kTest, sample});
}

}  // namespace testing_support
