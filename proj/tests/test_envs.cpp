#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "aggrevate/envs.hpp"
#include "aggrevate/oracle.hpp"
#include "test_support.hpp"

using namespace aggrevate;
using testing_support::test_rng;

TEST_CASE("cliff corridor: structure") {
  const CliffConfig c;
  const auto env = make_cliff_corridor(c);
  const CliffLayout layout{c.width, c.height};
  CHECK(validate_mdp(env.spec).ok());
  CHECK(env.spec.num_states == layout.num_states());
  CHECK(env.spec.initial_dist[layout.cell(0, 0)] == 1.0);
  const int goal = layout.cell(1, c.width - 1);
  for (int a = 0; a < 4; ++a) {
    CHECK(env.spec.transitions[goal][a][goal] == 1.0);
    CHECK(env.spec.costs[goal][a] == 0.0);
    CHECK(env.spec.transitions[layout.fallen()][a][layout.fallen()] == 1.0);
    CHECK(env.spec.costs[layout.fallen()][a] == 1.0);
  }
  // Slip spreads `slip` evenly over the four moves: stepping down from the
  // edge row falls with probability 1 - slip + slip / 4.
  const int edge = layout.cell(0, 2);
  CHECK(env.spec.transitions[edge][kDown][layout.fallen()] == doctest::Approx(1.0 - 0.1 + 0.025));
  CHECK(env.spec.transitions[edge][kRight][layout.fallen()] == doctest::Approx(0.025));
  CHECK(env.spec.costs[edge][kRight] == doctest::Approx(c.edge_cost));
  CHECK(env.spec.costs[layout.cell(1, 2)][kRight] == doctest::Approx(c.inner_cost));
  REQUIRE(env.policy_class.has_value());
  CHECK(env.policy_class->size() == 3);
}

TEST_CASE("cliff corridor: the expert is optimal and the cliff-seeker is far worse") {
  const CliffConfig c;
  const auto env = make_cliff_corridor(c);
  const double j_expert = policy_value(env.spec, env.expert);
  const double j_opt = policy_value(env.spec, finite_horizon_optimal_policy(env.spec).policy);
  CHECK(std::abs(j_expert - j_opt) <= 1e-12);
  const double j_cliff = policy_value(env.spec, cliff_seeking_policy(c));
  const double j_safe = policy_value(env.spec, safe_detour_policy(c));
  CHECK(j_cliff >= j_expert + 1.0);
  CHECK(j_safe > j_expert);
  CHECK(j_safe < j_cliff);
  const auto imperfect = cliff_imperfect_class(c);
  REQUIRE(imperfect.size() == 2);
  CHECK(policy_value(env.spec, imperfect.members[0]) == doctest::Approx(j_cliff));
  CHECK(policy_value(env.spec, imperfect.members[1]) == doctest::Approx(j_safe));
}

TEST_CASE("cliff corridor without slip: the cliff-seeker falls on step one") {
  CliffConfig c;
  c.slip = 0.0;
  const auto env = make_cliff_corridor(c);
  // One edge-row step then T - 1 steps in the fallen state.
  CHECK(policy_value(env.spec, cliff_seeking_policy(c)) == doctest::Approx(0.1 + 9.0));
  // Five edge-row steps to the goal column.
  CHECK(policy_value(env.spec, env.expert) == doctest::Approx(0.5));
}

TEST_CASE("two roads: hand-computed values") {
  const TwoRoadConfig c;
  const auto env = make_two_road(c);
  CHECK(validate_mdp(env.spec).ok());
  // Expert: start, two narrow cells, goal: 3 steps at 0.2.
  CHECK(policy_value(env.spec, env.expert) == doctest::Approx(0.6));
  REQUIRE(env.policy_class.has_value());
  REQUIRE(env.policy_class->size() == 2);
  // Narrow road with action 0: two paid steps, then six steps fallen.
  CHECK(policy_value(env.spec, env.policy_class->members[0]) == doctest::Approx(0.4 + 6.0));
  // Long road: six paid steps.
  CHECK(policy_value(env.spec, env.policy_class->members[1]) == doctest::Approx(1.2));
  CHECK_THROWS(make_two_road({5, 2, 5, 0.2}));
}

TEST_CASE("random MDPs are valid and deterministic in the seed") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    RandomMdpConfig c;
    c.seed = seed;
    c.sparsity = (seed % 3 == 0) ? 0.5 : 0.0;
    const auto env = make_random_mdp(c);
    CHECK(validate_mdp(env.spec).ok());
  }
  RandomMdpConfig c;
  c.seed = 42;
  const auto a = make_random_mdp(c);
  const auto b = make_random_mdp(c);
  CHECK(a.spec == b.spec);
  c.seed = 43;
  CHECK_FALSE(make_random_mdp(c).spec == a.spec);
}

TEST_CASE("random MDP: expert beats random policies, class ends with the expert") {
  RandomMdpConfig c;
  c.seed = 5;
  c.class_size = 3;
  const auto env = make_random_mdp(c);
  const double j_expert = policy_value(env.spec, env.expert);
  auto rng = test_rng(5);
  for (int k = 0; k < 100; ++k) {
    CHECK(j_expert <= policy_value(env.spec, random_stochastic_policy(5, 3, 5, rng)) + 1e-12);
  }
  REQUIRE(env.policy_class.has_value());
  CHECK(env.policy_class->size() == 4);
  CHECK(to_json(env.policy_class->members.back()) == to_json(env.expert));
}

TEST_CASE("environment config parsing is strict") {
  const auto j = nlohmann::json::parse(R"({"kind":"random","states":3,"seed":9})");
  const auto c = env_config_from_json(j);
  CHECK(c.random.states == 3);
  CHECK(c.random.seed == 9);
  CHECK(env_config_from_json(to_json(c)).random.seed == 9);
  try {
    env_config_from_json(nlohmann::json::parse(R"({"kind":"two_road","width":3})"));
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()) == "env.width: unknown field");
  }
  CHECK_THROWS(env_config_from_json(nlohmann::json::parse(R"({"kind":"maze"})")));
  CHECK_THROWS(env_config_from_json(nlohmann::json::parse(R"({"kind":"random","states":"x"})")));
  CHECK(make_environment(EnvConfig{}).name.size() > 0);
}
