#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "aggrevate/algorithms.hpp"
#include "aggrevate/envs.hpp"
#include "test_support.hpp"

using namespace aggrevate;
using testing_support::small_random;

namespace {

LearnerConfig ftl(FinitePolicyClass cls) {
  LearnerConfig c;
  c.kind = LearnerKind::kFtl;
  c.policy_class = std::move(cls);
  return c;
}

RunOptions opts(int N, int m, double alpha, std::uint64_t seed) {
  RunOptions o;
  o.iterations = N;
  o.samples = m;
  o.schedule = BetaSchedule{alpha};
  o.seed = seed;
  return o;
}

Vec iterate_values(const MdpSpec& spec, const RunReport& r) {
  Vec out;
  for (const auto& p : r.policies) out.push_back(policy_value(spec, p));
  return out;
}

}  // namespace

TEST_CASE("beta schedule, hand values") {
  const BetaSchedule full{1.0};
  CHECK(full.beta(1) == 1.0);
  CHECK(full.beta(2) == 0.0);
  CHECK(full.n_beta(5, 10) == 1);
  CHECK(full.remainder_factor(5, 10) == 1.0);
  const BetaSchedule half{0.5};
  CHECK(half.beta(3) == 0.25);
  // beta > 1/4 for i = 1, 2; tail 0.25 + 0.125 over N = 4.
  CHECK(half.n_beta(4, 4) == 2);
  CHECK(half.remainder_factor(4, 4) == doctest::Approx(2.0 + 4.0 * 0.375));
  CHECK_THROWS(BetaSchedule{0.0}.beta(1));
  CHECK_THROWS(half.beta(0));
}

TEST_CASE("learner names") {
  for (auto k : {LearnerKind::kFtl, LearnerKind::kHedge, LearnerKind::kOgdRegression,
                 LearnerKind::kBatchRegression}) {
    CHECK(learner_kind_from_string(to_string(k)) == k);
  }
  CHECK(is_regression(LearnerKind::kOgdRegression));
  CHECK_FALSE(is_regression(LearnerKind::kHedge));
  CHECK_THROWS(learner_kind_from_string("sgd"));
}

TEST_CASE("singleton class holding the expert: every iterate is the expert, bound is tight") {
  const auto env = small_random(31, 4, 3, 5);
  const auto cls = FinitePolicyClass::uniform({env.expert});
  const auto r = run_aggrevate(env.spec, env.expert, ftl(cls), opts(5, 50, 1.0, 1));
  const double j = policy_value(env.spec, env.expert);
  for (const auto& rec : r.iterations) CHECK(std::abs(*rec.exact_j - j) <= 1e-12);
  const auto c = theorem1_check(r, env.spec, env.expert, cls);
  CHECK(std::abs(c.lhs) <= 1e-12);
  CHECK(std::abs(c.eps_regret) <= 1e-12);
  CHECK(std::abs(c.eps_class) <= 1e-12);
  CHECK(c.holds);
}

TEST_CASE("a single iteration produces one iterate and a final policy") {
  const auto env = small_random(32);
  const auto r = run_aggrevate(env.spec, env.expert, ftl(*env.policy_class), opts(1, 10, 1.0, 2));
  CHECK(r.policies.size() == 1);
  CHECK(r.final_policy.has_value());
  CHECK(r.best_index == 0);
  CHECK(theorem1_check(r, env.spec, env.expert, *env.policy_class).holds);
}

TEST_CASE("mixture value is the iterate mean and bounds the best iterate") {
  const auto env = small_random(33, 5, 3, 5);
  const auto r = run_aggrevate(env.spec, env.expert, ftl(*env.policy_class), opts(8, 30, 0.5, 3));
  const Vec js = iterate_values(env.spec, r);
  double mean = 0.0;
  for (double j : js) mean += j;
  mean /= js.size();
  CHECK(std::abs(policy_value(env.spec, r.mixture()) - mean) <= 1e-12);
  CHECK(*std::min_element(js.begin(), js.end()) <= mean + 1e-12);
  CHECK(js[r.best_index] == *std::min_element(js.begin(), js.end()));
}

TEST_CASE("exact online loss of the optimal expert equals the min loss") {
  const auto env = small_random(34);
  const auto q = exact_q(env.spec, env.expert);
  const auto d = exact_state_distributions(env.spec, Policy::uniform_random(4, 3, 4));
  CHECK(std::abs(exact_online_loss(d, q, env.expert) - exact_min_loss(d, q)) <= 1e-12);
  CHECK(exact_online_loss(d, q, Policy::uniform_random(4, 3, 4)) >= exact_min_loss(d, q));
}

TEST_CASE("AggreVaTe and DAgger consume matched sample budgets") {
  const CliffConfig c;
  const auto env = make_cliff_corridor(c);
  const auto cls = cliff_imperfect_class(c);
  const auto a = run_aggrevate(env.spec, env.expert, ftl(cls), opts(6, 40, 1.0, 4));
  const auto d = dagger_classification(env.spec, env.expert, ftl(cls), opts(6, 40, 1.0, 4));
  CHECK(a.data.size() == 240);
  CHECK(d.imitation_data.size() == 240);
  CHECK(a.data.num_rounds() == d.imitation_data.num_rounds());
}

TEST_CASE("behavior cloning is realizable when the expert is in the class") {
  const auto env = make_cliff_corridor(CliffConfig{});
  const auto pi = behavior_cloning(env.spec, env.expert, ftl(*env.policy_class), opts(5, 50, 1.0, 5));
  CHECK(std::abs(policy_value(env.spec, pi) - policy_value(env.spec, env.expert)) <= 1e-12);
  LearnerConfig hedge = ftl(*env.policy_class);
  hedge.kind = LearnerKind::kHedge;
  CHECK_THROWS_AS(behavior_cloning(env.spec, env.expert, hedge, opts(5, 50, 1.0, 5)),
                  IncompatibleLearner);
}

TEST_CASE("class learners without a class are incompatible") {
  const auto env = small_random(35);
  LearnerConfig c;
  c.kind = LearnerKind::kHedge;
  CHECK_THROWS_AS(run_aggrevate(env.spec, env.expert, c, opts(2, 10, 1.0, 1)), IncompatibleLearner);
}

TEST_CASE("NRPI started at the optimum on a deterministic cliff stays optimal") {
  CliffConfig c;
  c.slip = 0.0;
  const auto env = make_cliff_corridor(c);
  const auto r = run_nrpi(env.spec, Exploration{env.expert}, ftl(*env.policy_class), env.expert,
                          opts(5, 2000, 0.3, 6));
  const double j = policy_value(env.spec, env.expert);
  for (const auto& rec : r.iterations) CHECK(std::abs(*rec.exact_j - j) <= 1e-12);
  // Schedule is forced to alpha = 1.
  CHECK(r.schedule.alpha == 1.0);
  const auto nu = exploration_schedule(env.spec, Exploration{env.expert});
  const auto t3 = theorem3_check(r, env.spec, env.expert, nu, *env.policy_class);
  CHECK(t3.distance <= 1e-12);
  CHECK(t3.holds);
}

TEST_CASE("theorem3_check with a mismatched exploration distribution") {
  const auto env = small_random(36, 5, 3, 5);
  const auto nu = StateDistSchedule::from_per_time(Mat(5, Vec(5, 0.2)));
  const auto r = run_nrpi(env.spec, Exploration{nu}, ftl(*env.policy_class),
                          Policy::uniform_random(5, 3, 5), opts(10, 100, 1.0, 7));
  for (const auto& member : env.policy_class->members) {
    const auto c = theorem3_check(r, env.spec, member, nu, *env.policy_class);
    CHECK(c.distance > 0.0);
    CHECK(c.holds);
  }
}

TEST_CASE("theorem1_check holds for FTL and Hedge runs") {
  for (std::uint64_t seed = 40; seed < 44; ++seed) {
    const auto env = small_random(seed, 5, 3, 5);
    auto learner = ftl(*env.policy_class);
    CHECK(theorem1_check(run_aggrevate(env.spec, env.expert, learner, opts(10, 50, 0.5, seed)),
                         env.spec, env.expert, *env.policy_class)
              .holds);
    learner.kind = LearnerKind::kHedge;
    const auto r = run_aggrevate(env.spec, env.expert, learner, opts(10, 50, 0.5, seed));
    CHECK(r.iterations[0].eta.has_value());
    CHECK(r.iterations[0].member.has_value());
    CHECK(theorem1_check(r, env.spec, env.expert, *env.policy_class).holds);
  }
}

TEST_CASE("theorem1_check accepts recorded J and flags an inconsistent one") {
  const auto env = small_random(45);
  const auto r = run_aggrevate(env.spec, env.expert, ftl(*env.policy_class), opts(4, 20, 1.0, 8));
  Vec recorded = iterate_values(env.spec, r);
  const auto good = theorem1_check(r, env.spec, env.expert, *env.policy_class, recorded);
  CHECK(good.holds);
  for (double& j : recorded) j += 100.0;
  CHECK_FALSE(theorem1_check(r, env.spec, env.expert, *env.policy_class, recorded).holds);
}

TEST_CASE("theorem2_diagnostics on a regression run") {
  const auto env = small_random(46, 4, 3, 4);
  LearnerConfig c;
  c.kind = LearnerKind::kBatchRegression;
  c.features = FeatureKind::kStateActionTime;
  const auto r = run_aggrevate(env.spec, env.expert, c, opts(6, 100, 1.0, 9));
  CHECK(r.regressors.size() == 6);
  const auto d = theorem2_diagnostics(r, env.spec, env.expert, 0.1);
  // Cell features represent every function of (s, a, t).
  CHECK(std::abs(d.eps_class_hat) <= 1e-6);
  CHECK(d.holds);
  CHECK_THROWS(theorem2_diagnostics(r, env.spec, env.expert, 0.0));
  const auto f = run_aggrevate(env.spec, env.expert, ftl(*env.policy_class), opts(2, 10, 1.0, 9));
  CHECK_THROWS(theorem2_diagnostics(f, env.spec, env.expert, 0.1));
}

TEST_CASE("OGD regression runs and records its regressors") {
  const auto env = small_random(47);
  LearnerConfig c;
  c.kind = LearnerKind::kOgdRegression;
  c.step_size = 0.1;
  const auto r = run_aggrevate(env.spec, env.expert, c, opts(5, 50, 1.0, 10));
  CHECK(r.regressors.size() == 5);
  for (double w : r.regressors.front().weights) CHECK(w == 0.0);
  CHECK(r.final_policy->kind() == Policy::Kind::kLinearArgmin);
}

TEST_CASE("runs do not depend on the worker count") {
  const auto env = small_random(48, 5, 3, 5);
  auto o = opts(5, 64, 0.5, 11);
  LearnerConfig learner = ftl(*env.policy_class);
  learner.kind = LearnerKind::kHedge;
  const auto a = run_aggrevate(env.spec, env.expert, learner, o);
  o.workers = 4;
  const auto b = run_aggrevate(env.spec, env.expert, learner, o);
  CHECK(a.data.flattened() == b.data.flattened());
  for (std::size_t i = 0; i < a.policies.size(); ++i) CHECK(to_json(a.policies[i]) == to_json(b.policies[i]));
  CHECK(a.policy_class->weights == b.policy_class->weights);
}

TEST_CASE("Monte-Carlo validation") {
  const CliffConfig c;
  const auto env = make_cliff_corridor(c);
  const std::vector<Policy> candidates{safe_detour_policy(c), env.expert, cliff_seeking_policy(c)};
  int expert_wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    expert_wins += select_best_on_validation(candidates, env.spec, {false, 200}, seed) == 1;
  }
  CHECK(expert_wins == 20);
  CHECK(select_best_on_validation(candidates, env.spec, {true, 1}, 0) == 1);
  // Earliest index on exact ties.
  CHECK(select_best_on_validation({env.expert, env.expert}, env.spec, {true, 1}, 0) == 0);

  const double exact = policy_value(env.spec, env.expert);
  const int budget = 4000;
  double sum = 0.0, sq = 0.0;
  for (int j = 0; j < budget; ++j) {
    RngStream rng(3, {0, Lane::kValidation, static_cast<std::uint64_t>(j)});
    double cost = 0.0;
    for (const auto& step : sample_trajectory(env.spec, env.expert, rng)) cost += step.cost;
    sum += cost;
    sq += cost * cost;
  }
  const double mean = sum / budget;
  const double se = std::sqrt((sq / budget - mean * mean) / budget);
  CHECK(estimate_policy_value(env.spec, env.expert, budget, 3, 0) == doctest::Approx(mean));
  CHECK(std::abs(mean - exact) <= 4.0 * se);
}
