#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "aggrevate/mdp.hpp"
#include "aggrevate/oracle.hpp"
#include "aggrevate/policy.hpp"
#include "aggrevate/rng.hpp"

namespace aggrevate {

/// One observed cost-to-go sample: action `action` explored in `state` at
/// wall-clock `time`, followed by a continuation policy to the horizon.
struct CostToGoExample {
  int state = 0;
  int time = 1;
  int action = 0;
  double q_estimate = 0.0;

  bool operator==(const CostToGoExample&) const = default;
};

/// A state visited at `time` together with the expert's action there.
struct ImitationExample {
  int state = 0;
  int time = 1;
  int expert_action = 0;

  bool operator==(const ImitationExample&) const = default;
};

struct Step {
  int state = 0;
  int action = 0;
  double cost = 0.0;
};

/// Source of per-sample streams for one collection round.
struct BatchRng {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  /// Threads used to fill the batch; output does not depend on it.
  int workers = 1;

  RngStream stream(std::uint64_t sample) const {
    return RngStream(seed, {iteration, Lane::kCollect, sample});
  }
};

/// Replaces every trajectory mixture by one member drawn uniformly from rng.
Policy realize_for_trajectory(const Policy& pi, RngStream& rng);

int sample_action(const Policy& pi, int s, int t, RngStream& rng);
int sample_next_state(const MdpSpec& spec, int s, int a, RngStream& rng);

std::vector<Step> sample_trajectory(const MdpSpec& spec, const Policy& pi, RngStream& rng);

/// C[s][a] plus the sampled cost of following `continuation` from t+1 to T.
double estimate_cost_to_go(const MdpSpec& spec, int s, int t, int a, const Policy& continuation,
                           RngStream& rng);

/// Runs pi from a fresh initial state for t-1 steps and returns s_t.
int roll_in(const MdpSpec& spec, const Policy& pi, int t, RngStream& rng);

/// Data collection of one AggreVaTe round: roll in with the per-step mixture
/// of learner and expert, explore a uniform action at a uniform time, and
/// observe the expert's cost-to-go.
std::vector<CostToGoExample> collect_aggrevate_batch(const MdpSpec& spec, const Policy& learner,
                                                     const Policy& expert, double beta, int m,
                                                     const BatchRng& rng);

using Exploration = std::variant<StateDistSchedule, Policy>;

/// Data collection of one NRPI round: draw s_t from the exploration schedule
/// (or by executing an exploration policy), explore a uniform action, and
/// observe the cost-to-go of the current policy.
std::vector<CostToGoExample> collect_nrpi_batch(const MdpSpec& spec, const Policy& current,
                                                const Exploration& exploration, int m,
                                                const BatchRng& rng);

/// States visited by the per-step mixture of learner and expert at a uniform
/// time, labeled with the expert's action.
std::vector<ImitationExample> collect_imitation_batch(const MdpSpec& spec, const Policy& learner,
                                                      const Policy& expert, double beta, int m,
                                                      const BatchRng& rng);

// Line-delimited records:
// {"iteration":i,"state":s,"time":t,"action":a,"q_estimate":q,
//  "seed_info":{"seed":...,"lane":...,"sample":j}}
struct ExampleRecord {
  std::uint64_t iteration = 0;
  CostToGoExample example;
  std::uint64_t seed = 0;
  std::uint64_t sample = 0;

  bool operator==(const ExampleRecord&) const = default;
};

std::string example_record_line(const ExampleRecord& record);
ExampleRecord parse_example_record(const std::string& line);
void write_batch(std::ostream& out, std::uint64_t seed, std::uint64_t iteration,
                 const std::vector<CostToGoExample>& batch);
std::vector<ExampleRecord> read_example_records(std::istream& in);

}  // namespace aggrevate
