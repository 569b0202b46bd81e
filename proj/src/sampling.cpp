#include "aggrevate/sampling.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "aggrevate/parallel.hpp"

namespace aggrevate {

Policy realize_for_trajectory(const Policy& pi, RngStream& rng) {
  switch (pi.kind()) {
    case Policy::Kind::kTrajectoryMixture: {
      const auto& members = pi.members();
      const auto& chosen = members[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(members.size())))];
      return realize_for_trajectory(chosen, rng);
    }
    case Policy::Kind::kStepMixture:
      if (pi.is_markov()) return pi;
      return Policy::step_mixture(realize_for_trajectory(pi.mixture_base(), rng),
                                  realize_for_trajectory(pi.mixture_expert(), rng),
                                  pi.mixture_beta());
    default:
      return pi;
  }
}

int sample_action(const Policy& pi, int s, int t, RngStream& rng) {
  return rng.categorical(pi.action_distribution(s, t));
}

int sample_next_state(const MdpSpec& spec, int s, int a, RngStream& rng) {
  return rng.categorical(spec.transitions[s][a]);
}

std::vector<Step> sample_trajectory(const MdpSpec& spec, const Policy& pi, RngStream& rng) {
  require_compatible(spec, pi);
  const Policy run = realize_for_trajectory(pi, rng);
  std::vector<Step> out;
  out.reserve(static_cast<std::size_t>(spec.horizon));
  int s = rng.categorical(spec.initial_dist);
  for (int t = 1; t <= spec.horizon; ++t) {
    const int a = sample_action(run, s, t, rng);
    out.push_back({s, a, spec.costs[s][a]});
    if (t < spec.horizon) s = sample_next_state(spec, s, a, rng);
  }
  return out;
}

double estimate_cost_to_go(const MdpSpec& spec, int s, int t, int a, const Policy& continuation,
                           RngStream& rng) {
  if (t < 1 || t > spec.horizon) throw std::invalid_argument("estimate_cost_to_go: t outside 1..T");
  double q = spec.costs[s][a];
  if (t == spec.horizon) return q;
  const Policy run = realize_for_trajectory(continuation, rng);
  int state = sample_next_state(spec, s, a, rng);
  for (int tau = t + 1; tau <= spec.horizon; ++tau) {
    const int act = sample_action(run, state, tau, rng);
    q += spec.costs[state][act];
    if (tau < spec.horizon) state = sample_next_state(spec, state, act, rng);
  }
  return q;
}

int roll_in(const MdpSpec& spec, const Policy& pi, int t, RngStream& rng) {
  int s = rng.categorical(spec.initial_dist);
  for (int tau = 1; tau < t; ++tau) {
    const int a = sample_action(pi, s, tau, rng);
    s = sample_next_state(spec, s, a, rng);
  }
  return s;
}

namespace {

void require_batch_size(int m) {
  if (m < 1) throw std::invalid_argument("batch size m must be at least 1");
}

}  // namespace

std::vector<CostToGoExample> collect_aggrevate_batch(const MdpSpec& spec, const Policy& learner,
                                                     const Policy& expert, double beta, int m,
                                                     const BatchRng& rng) {
  require_batch_size(m);
  require_compatible(spec, learner);
  require_compatible(spec, expert);
  const Policy mixture = Policy::step_mixture(learner, expert, beta);
  return parallel_generate<CostToGoExample>(
      static_cast<std::size_t>(m), rng.workers, [&](std::size_t j) {
        RngStream rs = rng.stream(j);
        const int t = 1 + rs.uniform_int(spec.horizon);
        const Policy roll = realize_for_trajectory(mixture, rs);
        const int s = roll_in(spec, roll, t, rs);
        const int a = rs.uniform_int(spec.num_actions);
        const double q = estimate_cost_to_go(spec, s, t, a, expert, rs);
        return CostToGoExample{s, t, a, q};
      });
}

std::vector<CostToGoExample> collect_nrpi_batch(const MdpSpec& spec, const Policy& current,
                                                const Exploration& exploration, int m,
                                                const BatchRng& rng) {
  require_batch_size(m);
  require_compatible(spec, current);
  if (const auto* schedule = std::get_if<StateDistSchedule>(&exploration)) {
    if (schedule->horizon() != spec.horizon) {
      throw DimensionError("exploration schedule horizon does not match the MDP");
    }
    for (const auto& d : schedule->per_time) {
      if (static_cast<int>(d.size()) != spec.num_states) {
        throw DimensionError("exploration schedule has the wrong number of states");
      }
    }
  } else {
    require_compatible(spec, std::get<Policy>(exploration));
  }
  return parallel_generate<CostToGoExample>(
      static_cast<std::size_t>(m), rng.workers, [&](std::size_t j) {
        RngStream rs = rng.stream(j);
        const int t = 1 + rs.uniform_int(spec.horizon);
        int s = 0;
        if (const auto* schedule = std::get_if<StateDistSchedule>(&exploration)) {
          s = rs.categorical(schedule->per_time[static_cast<std::size_t>(t - 1)]);
        } else {
          const Policy roll = realize_for_trajectory(std::get<Policy>(exploration), rs);
          s = roll_in(spec, roll, t, rs);
        }
        const int a = rs.uniform_int(spec.num_actions);
        const double q = estimate_cost_to_go(spec, s, t, a, current, rs);
        return CostToGoExample{s, t, a, q};
      });
}

std::vector<ImitationExample> collect_imitation_batch(const MdpSpec& spec, const Policy& learner,
                                                      const Policy& expert, double beta, int m,
                                                      const BatchRng& rng) {
  require_batch_size(m);
  require_compatible(spec, learner);
  require_compatible(spec, expert);
  const Policy mixture = Policy::step_mixture(learner, expert, beta);
  return parallel_generate<ImitationExample>(
      static_cast<std::size_t>(m), rng.workers, [&](std::size_t j) {
        RngStream rs = rng.stream(j);
        const int t = 1 + rs.uniform_int(spec.horizon);
        const Policy roll = realize_for_trajectory(mixture, rs);
        const int s = roll_in(spec, roll, t, rs);
        const Policy teacher = realize_for_trajectory(expert, rs);
        return ImitationExample{s, t, sample_action(teacher, s, t, rs)};
      });
}

std::string example_record_line(const ExampleRecord& record) {
  const nlohmann::json j{
      {"iteration", record.iteration},
      {"state", record.example.state},
      {"time", record.example.time},
      {"action", record.example.action},
      {"q_estimate", record.example.q_estimate},
      {"seed_info",
       {{"seed", record.seed},
        {"lane", static_cast<std::uint64_t>(Lane::kCollect)},
        {"sample", record.sample}}}};
  return j.dump();
}

ExampleRecord parse_example_record(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  ExampleRecord r;
  r.iteration = j.at("iteration").get<std::uint64_t>();
  r.example.state = j.at("state").get<int>();
  r.example.time = j.at("time").get<int>();
  r.example.action = j.at("action").get<int>();
  r.example.q_estimate = j.at("q_estimate").get<double>();
  r.seed = j.at("seed_info").at("seed").get<std::uint64_t>();
  r.sample = j.at("seed_info").at("sample").get<std::uint64_t>();
  return r;
}

void write_batch(std::ostream& out, std::uint64_t seed, std::uint64_t iteration,
                 const std::vector<CostToGoExample>& batch) {
  for (std::size_t j = 0; j < batch.size(); ++j) {
    out << example_record_line({iteration, batch[j], seed, j}) << '\n';
  }
}

std::vector<ExampleRecord> read_example_records(std::istream& in) {
  std::vector<ExampleRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_example_record(line));
  }
  return out;
}

}  // namespace aggrevate
