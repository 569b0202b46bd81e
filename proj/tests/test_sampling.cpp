#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "aggrevate/envs.hpp"
#include "aggrevate/oracle.hpp"
#include "aggrevate/sampling.hpp"
#include "test_support.hpp"

using namespace aggrevate;
using testing_support::small_random;
using testing_support::test_rng;

namespace {

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

template <class Draw>
Moments moments(int n, Draw draw) {
  double sum = 0.0, sq = 0.0;
  for (int j = 0; j < n; ++j) {
    const double x = draw(j);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = std::max(0.0, sq / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

TEST_CASE("cost-to-go rollouts are unbiased for exact Q") {
  const auto env = small_random(21, 4, 3, 5);
  auto prng = test_rng(21);
  const auto cont = random_stochastic_policy(4, 3, 5, prng);
  const auto q = exact_q(env.spec, cont);
  for (int t : {1, 3, 5}) {
    for (int s = 0; s < 4; ++s) {
      for (int a = 0; a < 3; ++a) {
        const auto m = moments(4000, [&](int j) {
          RngStream rs(77, {static_cast<std::uint64_t>(t * 100 + s * 10 + a), Lane::kTest,
                            static_cast<std::uint64_t>(j)});
          return estimate_cost_to_go(env.spec, s, t, a, cont, rs);
        });
        const double exact = q.at_time(t, s)[a];
        CHECK(std::abs(m.mean - exact) <= 4.0 * m.se + 1e-12);
      }
    }
  }
}

TEST_CASE("cost-to-go at the last step is the immediate cost exactly") {
  const auto env = small_random(3);
  auto rs = test_rng(3);
  for (int s = 0; s < 4; ++s) {
    CHECK(estimate_cost_to_go(env.spec, s, 4, 1, env.expert, rs) == env.spec.costs[s][1]);
  }
}

TEST_CASE("roll-in visits states with the exact marginal") {
  const auto env = small_random(8, 4, 3, 5);
  const auto uni = Policy::uniform_random(4, 3, 5);
  const auto d = exact_state_distributions(env.spec, uni);
  const int n = 20000;
  for (int t : {1, 2, 5}) {
    std::vector<int> counts(4, 0);
    for (int j = 0; j < n; ++j) {
      RngStream rs(5, {static_cast<std::uint64_t>(t), Lane::kTest, static_cast<std::uint64_t>(j)});
      ++counts[static_cast<std::size_t>(roll_in(env.spec, uni, t, rs))];
    }
    for (int s = 0; s < 4; ++s) {
      const double p = d.per_time[t - 1][s];
      const double se = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(counts[s] / double(n) - p) <= 4.0 * se + 1e-12);
    }
  }
}

TEST_CASE("aggrevate batch with beta = 1 follows the expert's state distribution") {
  const auto env = small_random(12, 4, 3, 4);
  const auto learner = Policy::stationary({2, 2, 2, 2}, 3, 4);
  const int m = 20000;
  const auto batch = collect_aggrevate_batch(env.spec, learner, env.expert, 1.0, m, {31, 1, 1});
  REQUIRE(batch.size() == static_cast<std::size_t>(m));
  const auto d = exact_state_distributions(env.spec, env.expert);
  std::vector<int> state_counts(4, 0), time_counts(4, 0), action_counts(3, 0);
  for (const auto& e : batch) {
    ++state_counts[e.state];
    ++time_counts[e.time - 1];
    ++action_counts[e.action];
  }
  for (int s = 0; s < 4; ++s) {
    const double p = d.averaged[s];
    CHECK(std::abs(state_counts[s] / double(m) - p) <= 4.0 * std::sqrt(p * (1 - p) / m) + 1e-12);
  }
  for (int c : time_counts) CHECK(std::abs(c / double(m) - 0.25) <= 4.0 * std::sqrt(0.1875 / m));
  const double pa = 1.0 / 3.0;
  for (int c : action_counts) CHECK(std::abs(c / double(m) - pa) <= 4.0 * std::sqrt(pa * (1 - pa) / m));
}

TEST_CASE("batches do not depend on the worker count") {
  const auto env = small_random(14);
  const auto learner = Policy::uniform_random(4, 3, 4);
  const auto one = collect_aggrevate_batch(env.spec, learner, env.expert, 0.5, 333, {9, 2, 1});
  const auto four = collect_aggrevate_batch(env.spec, learner, env.expert, 0.5, 333, {9, 2, 4});
  const auto seven = collect_aggrevate_batch(env.spec, learner, env.expert, 0.5, 333, {9, 2, 7});
  CHECK(one == four);
  CHECK(one == seven);
  const auto other_iter = collect_aggrevate_batch(env.spec, learner, env.expert, 0.5, 333, {9, 3, 1});
  CHECK(one != other_iter);

  const auto n1 = collect_nrpi_batch(env.spec, learner, Exploration{env.expert}, 200, {9, 1, 1});
  const auto n4 = collect_nrpi_batch(env.spec, learner, Exploration{env.expert}, 200, {9, 1, 4});
  CHECK(n1 == n4);
  const auto i1 = collect_imitation_batch(env.spec, learner, env.expert, 0.3, 200, {9, 1, 1});
  const auto i4 = collect_imitation_batch(env.spec, learner, env.expert, 0.3, 200, {9, 1, 3});
  CHECK(i1 == i4);
}

TEST_CASE("imitation labels are the expert's actions") {
  const auto env = small_random(15);
  const auto batch = collect_imitation_batch(env.spec, Policy::uniform_random(4, 3, 4), env.expert,
                                             0.0, 300, {1, 1, 1});
  const auto table = env.expert.greedy_table();
  for (const auto& e : batch) CHECK(e.expert_action == table[e.state][e.time - 1]);
}

TEST_CASE("nrpi batch draws states from an explicit schedule") {
  const auto env = small_random(16, 4, 3, 3);
  // All mass on state 2 at every time.
  StateDistSchedule nu = StateDistSchedule::from_per_time(Mat(3, Vec{0.0, 0.0, 1.0, 0.0}));
  const auto batch = collect_nrpi_batch(env.spec, env.expert, Exploration{nu}, 100, {4, 1, 1});
  for (const auto& e : batch) CHECK(e.state == 2);
}

TEST_CASE("records round-trip through line-delimited text") {
  const auto env = small_random(17);
  const auto batch = collect_aggrevate_batch(env.spec, env.expert, env.expert, 1.0, 50, {123, 4, 1});
  std::stringstream ss;
  write_batch(ss, 123, 4, batch);
  const auto records = read_example_records(ss);
  REQUIRE(records.size() == batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    CHECK(records[j].example == batch[j]);
    CHECK(records[j].iteration == 4);
    CHECK(records[j].seed == 123);
    CHECK(records[j].sample == j);
  }
  const auto line = example_record_line(records[3]);
  CHECK(parse_example_record(line) == records[3]);
}

TEST_CASE("invalid batch sizes are rejected") {
  const auto env = small_random(18);
  CHECK_THROWS(collect_aggrevate_batch(env.spec, env.expert, env.expert, 1.0, 0, {1, 1, 1}));
}

TEST_CASE("categorical sampling never returns zero-probability entries") {
  auto rs = test_rng(19);
  for (int j = 0; j < 5000; ++j) CHECK(rs.categorical({0.0, 0.3, 0.0, 0.7, 0.0}) % 2 == 1);
}
