#include "aggrevate/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

namespace aggrevate {

namespace {

struct TabularData {
  std::vector<std::vector<int>> actions;
  int num_actions;
};
struct StochasticData {
  std::vector<Mat> probs;
};
struct StepMixtureData {
  Policy base;
  Policy expert;
  double beta;
};
struct TrajectoryMixtureData {
  std::vector<Policy> members;
};
struct LinearData {
  LinearQRegressor regressor;
};

}  // namespace

struct Policy::Node {
  std::variant<TabularData, StochasticData, StepMixtureData, TrajectoryMixtureData, LinearData>
      data;
  int num_states;
  int num_actions;
  int horizon;
  bool markov;
};

namespace {

void require_same_shape(const Policy& a, const Policy& b) {
  if (a.num_states() != b.num_states() || a.num_actions() != b.num_actions() ||
      a.horizon() != b.horizon()) {
    throw DimensionError("policies have different (states, actions, horizon)");
  }
}

}  // namespace

Policy Policy::tabular(std::vector<std::vector<int>> actions, int num_actions) {
  if (actions.empty() || actions.front().empty() || num_actions <= 0) {
    throw DimensionError("tabular policy needs at least one state, time step and action");
  }
  const auto T = actions.front().size();
  for (const auto& row : actions) {
    if (row.size() != T) throw DimensionError("ragged tabular policy");
    for (int a : row) {
      if (a < 0 || a >= num_actions) throw DimensionError("tabular action out of range");
    }
  }
  const int S = static_cast<int>(actions.size());
  return Policy(std::make_shared<const Node>(
      Node{TabularData{std::move(actions), num_actions}, S, num_actions, static_cast<int>(T), true}));
}

Policy Policy::stationary(const std::vector<int>& actions, int num_actions, int horizon) {
  std::vector<std::vector<int>> table;
  table.reserve(actions.size());
  for (int a : actions) table.emplace_back(static_cast<std::size_t>(horizon), a);
  return tabular(std::move(table), num_actions);
}

Policy Policy::stochastic(std::vector<Mat> probs) {
  if (probs.empty() || probs.front().empty() || probs.front().front().empty()) {
    throw DimensionError("stochastic policy needs at least one time step, state and action");
  }
  const auto S = probs.front().size();
  const auto A = probs.front().front().size();
  for (auto& layer : probs) {
    if (layer.size() != S) throw DimensionError("ragged stochastic policy");
    for (auto& row : layer) {
      if (row.size() != A) throw DimensionError("ragged stochastic policy");
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw std::invalid_argument("negative or non-finite action probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kValidationTol) {
        throw std::invalid_argument("action probabilities do not sum to 1");
      }
      if (std::abs(sum - 1.0) > kIdentityTol) {
        for (double& p : row) p /= sum;
      }
    }
  }
  const int T = static_cast<int>(probs.size());
  return Policy(std::make_shared<const Node>(Node{StochasticData{std::move(probs)},
                                                  static_cast<int>(S), static_cast<int>(A), T,
                                                  true}));
}

Policy Policy::uniform_random(int num_states, int num_actions, int horizon) {
  if (num_states <= 0 || num_actions <= 0 || horizon <= 0) {
    throw DimensionError("uniform policy needs positive dimensions");
  }
  Vec row(static_cast<std::size_t>(num_actions), 1.0 / num_actions);
  return stochastic(std::vector<Mat>(static_cast<std::size_t>(horizon),
                                     Mat(static_cast<std::size_t>(num_states), row)));
}

Policy Policy::step_mixture(Policy base, Policy expert, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
  require_same_shape(base, expert);
  const int S = base.num_states(), A = base.num_actions(), T = base.horizon();
  const bool markov = base.is_markov() && expert.is_markov();
  return Policy(std::make_shared<const Node>(
      Node{StepMixtureData{std::move(base), std::move(expert), beta}, S, A, T, markov}));
}

Policy Policy::trajectory_mixture(std::vector<Policy> members) {
  if (members.empty()) throw std::invalid_argument("trajectory mixture needs members");
  for (const auto& m : members) require_same_shape(members.front(), m);
  const int S = members.front().num_states(), A = members.front().num_actions(),
            T = members.front().horizon();
  return Policy(std::make_shared<const Node>(
      Node{TrajectoryMixtureData{std::move(members)}, S, A, T, false}));
}

Policy Policy::linear_argmin(LinearQRegressor regressor) {
  const auto& f = regressor.features;
  if (regressor.weights.size() != f.dimension() || f.num_states <= 0 || f.num_actions <= 0 ||
      f.horizon <= 0) {
    throw DimensionError("regressor weights do not match feature dimension");
  }
  const int S = f.num_states, A = f.num_actions, T = f.horizon;
  return Policy(
      std::make_shared<const Node>(Node{LinearData{std::move(regressor)}, S, A, T, true}));
}

Policy::Kind Policy::kind() const { return static_cast<Kind>(node_->data.index()); }
int Policy::num_states() const { return node_->num_states; }
int Policy::num_actions() const { return node_->num_actions; }
int Policy::horizon() const { return node_->horizon; }
bool Policy::is_markov() const { return node_->markov; }

Vec Policy::action_distribution(int s, int t) const {
  if (s < 0 || s >= num_states() || t < 1 || t > horizon()) {
    throw DimensionError("policy query outside (state, time) range");
  }
  const auto A = static_cast<std::size_t>(num_actions());
  return std::visit(
      [&](const auto& d) -> Vec {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, TabularData>) {
          Vec out(A, 0.0);
          out[static_cast<std::size_t>(d.actions[s][t - 1])] = 1.0;
          return out;
        } else if constexpr (std::is_same_v<D, StochasticData>) {
          return d.probs[t - 1][s];
        } else if constexpr (std::is_same_v<D, StepMixtureData>) {
          Vec out = d.base.action_distribution(s, t);
          const Vec e = d.expert.action_distribution(s, t);
          for (std::size_t a = 0; a < A; ++a) out[a] = d.beta * e[a] + (1.0 - d.beta) * out[a];
          return out;
        } else if constexpr (std::is_same_v<D, TrajectoryMixtureData>) {
          Vec out(A, 0.0);
          for (const auto& m : d.members) {
            const Vec p = m.action_distribution(s, t);
            for (std::size_t a = 0; a < A; ++a) out[a] += p[a];
          }
          for (double& p : out) p /= static_cast<double>(d.members.size());
          return out;
        } else {
          Vec q(A);
          for (std::size_t a = 0; a < A; ++a) {
            q[a] = d.regressor.predict(s, static_cast<int>(a), t);
          }
          Vec out(A, 0.0);
          out[static_cast<std::size_t>(argmin_action(q))] = 1.0;
          return out;
        }
      },
      node_->data);
}

namespace {

template <class D>
const D& expect(const Policy::Node& node, const char* what) {
  const auto* d = std::get_if<D>(&node.data);
  if (d == nullptr) throw std::logic_error(std::string("policy is not a ") + what);
  return *d;
}

}  // namespace

const std::vector<std::vector<int>>& Policy::tabular_actions() const {
  return expect<TabularData>(*node_, "tabular policy").actions;
}
const std::vector<Mat>& Policy::stochastic_probs() const {
  return expect<StochasticData>(*node_, "stochastic policy").probs;
}
const Policy& Policy::mixture_base() const {
  return expect<StepMixtureData>(*node_, "step mixture").base;
}
const Policy& Policy::mixture_expert() const {
  return expect<StepMixtureData>(*node_, "step mixture").expert;
}
double Policy::mixture_beta() const {
  return expect<StepMixtureData>(*node_, "step mixture").beta;
}
const std::vector<Policy>& Policy::members() const {
  return expect<TrajectoryMixtureData>(*node_, "trajectory mixture").members;
}
const LinearQRegressor& Policy::regressor() const {
  return expect<LinearData>(*node_, "linear argmin policy").regressor;
}

std::vector<std::vector<int>> Policy::greedy_table() const {
  if (kind() == Kind::kTabular) return tabular_actions();
  std::vector<std::vector<int>> table(static_cast<std::size_t>(num_states()),
                                      std::vector<int>(static_cast<std::size_t>(horizon())));
  for (int s = 0; s < num_states(); ++s) {
    for (int t = 1; t <= horizon(); ++t) {
      const Vec p = action_distribution(s, t);
      int chosen = -1;
      for (std::size_t a = 0; a < p.size(); ++a) {
        if (p[a] > 1.0 - kValidationTol) chosen = static_cast<int>(a);
      }
      if (chosen < 0) throw std::logic_error("policy is not deterministic");
      table[s][t - 1] = chosen;
    }
  }
  return table;
}

void require_compatible(const MdpSpec& spec, const Policy& pi) {
  if (pi.num_states() != spec.num_states || pi.num_actions() != spec.num_actions ||
      pi.horizon() != spec.horizon) {
    throw DimensionError("policy dimensions (" + std::to_string(pi.num_states()) + ", " +
                         std::to_string(pi.num_actions()) + ", " + std::to_string(pi.horizon()) +
                         ") do not match MDP (" + std::to_string(spec.num_states) + ", " +
                         std::to_string(spec.num_actions) + ", " + std::to_string(spec.horizon) +
                         ")");
  }
}

int argmin_action(const Vec& values) {
  int best = 0;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (values[a] < values[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  }
  return best;
}

nlohmann::json to_json(const Policy& pi) {
  switch (pi.kind()) {
    case Policy::Kind::kTabular:
      return {{"kind", "tabular"},
              {"num_actions", pi.num_actions()},
              {"actions", pi.tabular_actions()}};
    case Policy::Kind::kStochastic:
      return {{"kind", "stochastic"}, {"probs", pi.stochastic_probs()}};
    case Policy::Kind::kStepMixture:
      return {{"kind", "step_mixture"},
              {"beta", pi.mixture_beta()},
              {"base", to_json(pi.mixture_base())},
              {"expert", to_json(pi.mixture_expert())}};
    case Policy::Kind::kTrajectoryMixture: {
      auto members = nlohmann::json::array();
      for (const auto& m : pi.members()) members.push_back(to_json(m));
      return {{"kind", "trajectory_mixture"}, {"members", std::move(members)}};
    }
    case Policy::Kind::kLinearArgmin:
      return {{"kind", "linear_argmin"}, {"regressor", to_json(pi.regressor())}};
  }
  throw std::logic_error("unreachable policy kind");
}

Policy policy_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "tabular") {
    return Policy::tabular(j.at("actions").get<std::vector<std::vector<int>>>(),
                           j.at("num_actions").get<int>());
  }
  if (kind == "stochastic") return Policy::stochastic(j.at("probs").get<std::vector<Mat>>());
  if (kind == "step_mixture") {
    return Policy::step_mixture(policy_from_json(j.at("base")), policy_from_json(j.at("expert")),
                                j.at("beta").get<double>());
  }
  if (kind == "trajectory_mixture") {
    std::vector<Policy> members;
    for (const auto& m : j.at("members")) members.push_back(policy_from_json(m));
    return Policy::trajectory_mixture(std::move(members));
  }
  if (kind == "linear_argmin") {
    return Policy::linear_argmin(regressor_from_json(j.at("regressor")));
  }
  throw std::invalid_argument("unknown policy kind '" + kind + "'");
}

}  // namespace aggrevate
