#include <doctest.h>

#include <nlohmann/json.hpp>

#include "aggrevate/mdp.hpp"
#include "test_support.hpp"

using namespace aggrevate;
using testing_support::toll_road;

TEST_CASE("a well-formed spec validates cleanly") {
  CHECK(validate_mdp(toll_road()).ok());
  CHECK_NOTHROW(require_valid(toll_road()));
}

TEST_CASE("row sums off by more than the tolerance are reported with their path") {
  auto spec = toll_road();
  spec.transitions[1][0] = {0.0, 0.9};
  const auto report = validate_mdp(spec);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].path == "transitions[1][0]");
  CHECK(report.violations[0].message.find("0.9") != std::string::npos);
  CHECK_THROWS_AS(require_valid(spec), std::invalid_argument);
}

TEST_CASE("row sums within 1e-9 are accepted") {
  auto spec = toll_road();
  spec.transitions[0][0] = {1.0 - 5e-10, 0.0};
  CHECK(validate_mdp(spec).ok());
  spec.transitions[0][0] = {1.0 - 5e-9, 0.0};
  CHECK_FALSE(validate_mdp(spec).ok());
}

TEST_CASE("costs outside [0,1] and negative probabilities are violations") {
  auto spec = toll_road();
  spec.costs[0][1] = 1.5;
  spec.transitions[0][0] = {1.5, -0.5};
  const auto report = validate_mdp(spec);
  bool cost = false, negative = false;
  for (const auto& v : report.violations) {
    cost = cost || (v.path == "costs[0][1]" && v.message == "cost out of [0,1]");
    negative = negative || v.message == "negative probability";
  }
  CHECK(cost);
  CHECK(negative);
}

TEST_CASE("dimension mismatches are violations, not crashes") {
  auto spec = toll_road();
  spec.costs.pop_back();
  CHECK_FALSE(validate_mdp(spec).ok());
  spec = toll_road();
  spec.initial_dist = {1.0};
  CHECK_FALSE(validate_mdp(spec).ok());
  spec = toll_road();
  spec.horizon = 0;
  CHECK_FALSE(validate_mdp(spec).ok());
}

TEST_CASE("text round-trip is exact") {
  const auto env = testing_support::small_random(3);
  const auto text = mdp_to_text(env.spec);
  CHECK(mdp_from_text(text) == env.spec);
  CHECK(mdp_to_text(mdp_from_text(text)) == text);
}

TEST_CASE("unknown fields in the structured text are rejected") {
  auto j = mdp_to_json(toll_road());
  j["discount"] = 0.9;
  CHECK_THROWS_AS(mdp_from_json(j), std::invalid_argument);
}
