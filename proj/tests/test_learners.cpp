#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "aggrevate/learners.hpp"
#include "test_support.hpp"

using namespace aggrevate;

namespace {

// One state, two actions, T = 1.
const FeatureMap kCells{FeatureKind::kStateActionTime, 1, 2, 1};

Policy always(int a) { return Policy::stationary({a}, 2, 1); }

}  // namespace

TEST_CASE("importance-weighted cost-sensitive loss, hand values") {
  const std::vector<CostToGoExample> data{{0, 1, 0, 0.4}, {0, 1, 1, 0.8}};
  // (2 * 0.4 * 1 + 2 * 0.8 * 0) / 2 = 0.4
  CHECK(empirical_cs_loss(data, always(0)) == doctest::Approx(0.4));
  CHECK(empirical_cs_loss(data, always(1)) == doctest::Approx(0.8));
  // Uniform: (0.4 + 0.8) / 2
  CHECK(empirical_cs_loss(data, Policy::uniform_random(1, 2, 1)) == doctest::Approx(0.6));
}

TEST_CASE("Hedge update matches the exponential-weights closed form") {
  auto cls = FinitePolicyClass::uniform({always(0), always(1)});
  const auto w = hedge_update(cls, {0.0, 1.0}, 1.0);
  const double z = 1.0 + std::exp(-1.0);
  CHECK(w[0] == doctest::Approx(1.0 / z).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-14));
  // Shifting all losses leaves the update unchanged.
  const auto shifted = hedge_update(cls, {5.0, 6.0}, 1.0);
  CHECK(shifted[0] == doctest::Approx(w[0]).epsilon(1e-14));
  CHECK_THROWS(hedge_update(cls, {0.0, 1.0}, 0.0));
  CHECK_THROWS(hedge_update(cls, {0.0}, 1.0));
}

TEST_CASE("default Hedge rate") {
  CHECK(hedge_default_eta(4, 50, 2.0) == doctest::Approx(std::sqrt(8.0 * std::log(4.0) / 50) / 2.0));
  CHECK_THROWS(hedge_default_eta(4, 0, 1.0));
}

TEST_CASE("Hedge with a huge rate concentrates on the FTL leader") {
  auto cls = FinitePolicyClass::uniform({always(0), always(1), Policy::uniform_random(1, 2, 1)});
  AggregatedDataset data;
  data.append({{0, 1, 0, 0.9}, {0, 1, 1, 0.2}});
  data.append({{0, 1, 0, 0.7}, {0, 1, 1, 0.3}});
  for (const auto& round : data.rounds()) cls.weights = hedge_update(cls, member_cs_losses(round, cls), 1e3);
  const auto ftl = ftl_select(data, cls);
  CHECK(ftl.index == 1);
  CHECK(cls.weights[1] > 1.0 - 1e-12);
}

TEST_CASE("FTL breaks ties towards the lowest index") {
  auto cls = FinitePolicyClass::uniform({always(0), always(1)});
  AggregatedDataset data;
  data.append({{0, 1, 0, 0.5}, {0, 1, 1, 0.5}});
  const auto choice = ftl_select(data, cls);
  CHECK(choice.index == 0);
  CHECK(choice.losses[0] == choice.losses[1]);
  CHECK_THROWS(ftl_select(AggregatedDataset{}, cls));
}

TEST_CASE("zero-one FTL") {
  auto cls = FinitePolicyClass::uniform({always(0), always(1)});
  ImitationDataset data;
  data.append({{0, 1, 1}, {0, 1, 1}, {0, 1, 0}});
  const auto choice = ftl_select_zero_one(data, cls);
  CHECK(choice.index == 1);
  CHECK(choice.losses[0] == doctest::Approx(2.0 / 3.0));
  CHECK(choice.losses[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("one OGD step with step size 1/4 moves halfway to the target") {
  const auto reg = LinearQRegressor::zeros(kCells);
  const std::vector<CostToGoExample> batch{{0, 1, 1, 1.0}};
  const auto step = ogd_regression_update(reg, batch, 0.25);
  CHECK(step.batch_loss == doctest::Approx(1.0));
  CHECK(step.updated.predict(0, 1, 1) == doctest::Approx(0.5));
  CHECK(step.updated.predict(0, 0, 1) == 0.0);
  CHECK(squared_loss(step.updated, batch) == doctest::Approx(0.25));
}

TEST_CASE("ridge fit on cell features recovers cell means") {
  const FeatureMap f{FeatureKind::kStateActionTime, 2, 2, 2};
  const std::vector<CostToGoExample> data{
      {0, 1, 0, 0.2}, {0, 1, 0, 0.6}, {1, 2, 1, 0.9}, {1, 2, 1, 0.3}, {1, 2, 1, 0.6}};
  const auto reg = fit_ridge(f, data, kLeastSquaresRidge);
  CHECK(reg.predict(0, 0, 1) == doctest::Approx(0.4).epsilon(1e-8));
  CHECK(reg.predict(1, 1, 2) == doctest::Approx(0.6).epsilon(1e-8));
  CHECK(std::abs(reg.predict(1, 0, 1)) <= 1e-12);
}

TEST_CASE("ridge fit with additive features solves the normal equations") {
  // Features onehot(s,a) + onehot(t) on a 1x1x2 problem: w_sa + w_t.
  const FeatureMap f{FeatureKind::kStateActionPlusTime, 1, 1, 2};
  const std::vector<CostToGoExample> data{{0, 1, 0, 1.0}, {0, 2, 0, 3.0}};
  const auto reg = fit_ridge(f, data, kLeastSquaresRidge);
  CHECK(reg.predict(0, 0, 1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(reg.predict(0, 0, 2) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("indicator targets and greedy regression policy") {
  const std::vector<ImitationExample> data{{0, 1, 1}};
  const auto targets = indicator_targets(data, 3);
  REQUIRE(targets.size() == 3);
  CHECK(targets[0].q_estimate == 1.0);
  CHECK(targets[1].q_estimate == 0.0);
  CHECK(targets[2].q_estimate == 1.0);
  const FeatureMap f{FeatureKind::kStateActionTime, 1, 3, 1};
  const auto pi = argmax_policy(fit_ridge(f, targets, kLeastSquaresRidge));
  CHECK(pi.action_distribution(0, 1) == Vec{0.0, 1.0, 0.0});
}

TEST_CASE("regret terms compare against the best fixed member") {
  const auto r = regret_terms({1.0, 1.0}, {{1.0, 0.0}, {0.0, 0.5}});
  CHECK(r.best_member == 1);
  CHECK(r.avg_learner_loss == doctest::Approx(1.0));
  CHECK(r.best_fixed_loss == doctest::Approx(0.25));
  CHECK(r.eps_regret == doctest::Approx(0.75));
  // Per-round best would be 0; the fixed comparator is 0.5 here.
  const auto tie = regret_terms({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}});
  CHECK(tie.best_member == 0);
  CHECK(tie.eps_regret == doctest::Approx(-0.5));
  CHECK_THROWS(regret_terms({}, {}));
}

TEST_CASE("aggregated dataset keeps round structure") {
  AggregatedDataset d;
  d.append({{0, 1, 0, 0.1}});
  d.append({{0, 1, 1, 0.2}, {0, 1, 0, 0.3}});
  CHECK(d.num_rounds() == 2);
  CHECK(d.size() == 3);
  CHECK(d.flattened()[2].q_estimate == 0.3);
}

TEST_CASE("policy class JSON round trip keeps weights") {
  auto cls = FinitePolicyClass::uniform({always(0), always(1)});
  cls.weights = {0.25, 0.75};
  const auto back = policy_class_from_json(to_json(cls));
  CHECK(back.weights == cls.weights);
  CHECK(back.size() == 2);
}
