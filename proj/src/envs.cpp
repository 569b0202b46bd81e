#include "aggrevate/envs.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "aggrevate/oracle.hpp"

namespace aggrevate {

namespace {

constexpr int kCliffActions = 4;

void require_cliff_config(const CliffConfig& c) {
  if (c.width < 3 || c.height < 2) {
    throw std::invalid_argument("cliff corridor needs width >= 3 and height >= 2");
  }
  if (!(c.slip >= 0.0 && c.slip <= 0.3)) {
    throw std::invalid_argument("cliff corridor slip must lie in [0, 0.3]");
  }
  if (c.horizon < 1) throw std::invalid_argument("cliff corridor horizon must be positive");
  if (!(c.edge_cost >= 0.0 && c.edge_cost <= 1.0 && c.inner_cost >= 0.0 && c.inner_cost <= 1.0)) {
    throw std::invalid_argument("cliff corridor costs must lie in [0,1]");
  }
}

int cliff_move(const CliffLayout& g, int s, int move) {
  const int r = g.row(s), c = g.col(s);
  switch (move) {
    case kRight:
      return g.cell(r, c + 1);
    case kUp:
      return g.cell(std::min(r + 1, g.height - 1), c);
    case kDown:
      return r == 0 ? g.fallen() : g.cell(r - 1, c);
    case kLeft:
      return g.cell(r, std::max(c - 1, 0));
  }
  throw std::logic_error("unknown cliff move");
}

Policy cliff_policy(const CliffConfig& c, int edge_action, int inner_action) {
  const CliffLayout g{c.width, c.height};
  std::vector<int> actions(static_cast<std::size_t>(g.num_states()), kRight);
  for (int s = 0; s < g.fallen(); ++s) {
    if (g.is_goal(s)) continue;
    actions[s] = g.row(s) == 0 ? edge_action : inner_action;
  }
  return Policy::stationary(actions, kCliffActions, c.horizon);
}

}  // namespace

Environment make_cliff_corridor(const CliffConfig& c) {
  require_cliff_config(c);
  const CliffLayout g{c.width, c.height};
  const int S = g.num_states();
  MdpSpec spec;
  spec.num_states = S;
  spec.num_actions = kCliffActions;
  spec.horizon = c.horizon;
  spec.transitions.assign(S, std::vector<Vec>(kCliffActions, Vec(S, 0.0)));
  spec.costs.assign(S, Vec(kCliffActions, 0.0));
  spec.initial_dist.assign(S, 0.0);
  spec.initial_dist[g.cell(0, 0)] = 1.0;

  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < kCliffActions; ++a) {
      auto& row = spec.transitions[s][a];
      if (s == g.fallen() || g.is_goal(s)) {
        row[s] = 1.0;
        spec.costs[s][a] = s == g.fallen() ? 1.0 : 0.0;
        continue;
      }
      spec.costs[s][a] = g.row(s) == 0 ? c.edge_cost : c.inner_cost;
      for (int move = 0; move < kCliffActions; ++move) {
        const double p = (move == a ? 1.0 - c.slip : 0.0) + c.slip / kCliffActions;
        row[cliff_move(g, s, move)] += p;
      }
    }
  }

  auto expert = finite_horizon_optimal_policy(spec).policy;
  auto cls = FinitePolicyClass::uniform(
      {cliff_seeking_policy(c), safe_detour_policy(c), expert});
  return {"cliff_corridor", std::move(spec), std::move(expert), std::move(cls)};
}

Policy cliff_seeking_policy(const CliffConfig& c) {
  require_cliff_config(c);
  return cliff_policy(c, kDown, kDown);
}

Policy safe_detour_policy(const CliffConfig& c) {
  require_cliff_config(c);
  return cliff_policy(c, kUp, kRight);
}

FinitePolicyClass cliff_imperfect_class(const CliffConfig& c) {
  return FinitePolicyClass::uniform({cliff_seeking_policy(c), safe_detour_policy(c)});
}

Environment make_two_road(const TwoRoadConfig& c) {
  if (c.horizon < 6) throw std::invalid_argument("two-road world needs horizon >= 6");
  if (c.narrow_length < 1 || c.long_length <= c.narrow_length) {
    throw std::invalid_argument("two-road world needs 1 <= narrow_length < long_length");
  }
  if (c.horizon < c.long_length + 1) {
    throw std::invalid_argument("horizon too short to finish the long road");
  }
  if (!(c.step_cost > 0.0 && c.step_cost <= 1.0)) {
    throw std::invalid_argument("two-road step cost must lie in (0,1]");
  }
  const TwoRoadLayout g{c.narrow_length, c.long_length};
  const int S = g.num_states();
  constexpr int A = 2;
  MdpSpec spec;
  spec.num_states = S;
  spec.num_actions = A;
  spec.horizon = c.horizon;
  spec.transitions.assign(S, std::vector<Vec>(A, Vec(S, 0.0)));
  spec.costs.assign(S, Vec(A, c.step_cost));
  spec.initial_dist.assign(S, 0.0);
  spec.initial_dist[g.start()] = 1.0;

  auto go = [&](int s, int a, int to) { spec.transitions[s][a][to] = 1.0; };
  go(g.start(), 0, g.narrow(0));
  go(g.start(), 1, g.long_road(0));
  for (int j = 0; j < c.narrow_length; ++j) {
    const int next = j + 1 < c.narrow_length ? g.narrow(j + 1) : g.goal();
    go(g.narrow(j), 0, g.fallen());
    go(g.narrow(j), 1, next);
  }
  for (int j = 0; j < c.long_length; ++j) {
    const int next = j + 1 < c.long_length ? g.long_road(j + 1) : g.goal();
    go(g.long_road(j), 0, next);
    go(g.long_road(j), 1, next);
  }
  for (int a = 0; a < A; ++a) {
    go(g.goal(), a, g.goal());
    go(g.fallen(), a, g.fallen());
    spec.costs[g.goal()][a] = 0.0;
    spec.costs[g.fallen()][a] = 1.0;
  }

  auto expert = finite_horizon_optimal_policy(spec).policy;
  std::vector<int> narrow_steady(static_cast<std::size_t>(S), 0);
  std::vector<int> long_road(static_cast<std::size_t>(S), 0);
  long_road[g.start()] = 1;
  auto cls = FinitePolicyClass::uniform({Policy::stationary(narrow_steady, A, c.horizon),
                                         Policy::stationary(long_road, A, c.horizon)});
  return {"two_road", std::move(spec), std::move(expert), std::move(cls)};
}

namespace {

Vec dirichlet_one(int n, RngStream& rng, double sparsity) {
  Vec out(static_cast<std::size_t>(n), 0.0);
  const int forced = rng.uniform_int(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const bool dropped = rng.uniform() < sparsity;
    const double e = -std::log1p(-rng.uniform());  // Exp(1)
    if (dropped && i != forced) continue;
    out[i] = e;
    total += e;
  }
  if (!(total > 0.0)) {
    out.assign(out.size(), 0.0);
    out[forced] = 1.0;
    return out;
  }
  for (double& x : out) x /= total;
  return out;
}

}  // namespace

Environment make_random_mdp(const RandomMdpConfig& c) {
  if (c.states < 1 || c.states > 20 || c.actions < 1 || c.actions > 4) {
    throw std::invalid_argument("random MDP limited to 1..20 states and 1..4 actions");
  }
  if (c.horizon < 1) throw std::invalid_argument("random MDP horizon must be positive");
  if (!(c.sparsity >= 0.0 && c.sparsity < 1.0)) {
    throw std::invalid_argument("random MDP sparsity must lie in [0,1)");
  }
  if (c.class_size < 0) throw std::invalid_argument("random MDP class_size must be >= 0");
  RngStream rng(c.seed, {0, Lane::kEnvironment, 0});
  MdpSpec spec;
  spec.num_states = c.states;
  spec.num_actions = c.actions;
  spec.horizon = c.horizon;
  spec.transitions.assign(c.states, std::vector<Vec>(c.actions));
  spec.costs.assign(c.states, Vec(c.actions));
  for (int s = 0; s < c.states; ++s) {
    for (int a = 0; a < c.actions; ++a) {
      spec.transitions[s][a] = dirichlet_one(c.states, rng, c.sparsity);
      spec.costs[s][a] = rng.uniform();
    }
  }
  spec.initial_dist = dirichlet_one(c.states, rng, 0.0);

  auto expert = finite_horizon_optimal_policy(spec).policy;
  RngStream class_rng(c.seed, {1, Lane::kEnvironment, 0});
  std::vector<Policy> members;
  for (int k = 0; k < c.class_size; ++k) {
    members.push_back(random_deterministic_policy(c.states, c.actions, c.horizon, class_rng));
  }
  members.push_back(expert);
  return {"random", std::move(spec), std::move(expert),
          FinitePolicyClass::uniform(std::move(members))};
}

Policy random_deterministic_policy(int states, int actions, int horizon, RngStream& rng) {
  std::vector<std::vector<int>> table(static_cast<std::size_t>(states),
                                      std::vector<int>(static_cast<std::size_t>(horizon)));
  for (auto& row : table) {
    for (int& a : row) a = rng.uniform_int(actions);
  }
  return Policy::tabular(std::move(table), actions);
}

Policy random_stochastic_policy(int states, int actions, int horizon, RngStream& rng) {
  std::vector<Mat> probs(static_cast<std::size_t>(horizon), Mat(static_cast<std::size_t>(states)));
  for (auto& layer : probs) {
    for (auto& row : layer) row = dirichlet_one(actions, rng, 0.0);
  }
  return Policy::stochastic(std::move(probs));
}

Environment make_environment(const EnvConfig& config) {
  if (config.kind == "cliff_corridor") return make_cliff_corridor(config.cliff);
  if (config.kind == "two_road") return make_two_road(config.two_road);
  if (config.kind == "random") return make_random_mdp(config.random);
  throw std::invalid_argument("unknown environment kind '" + config.kind + "'");
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw std::invalid_argument("env." + key + ": unknown field");
  }
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("env.") + key + ": wrong type");
  }
}

}  // namespace

EnvConfig env_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("env: expected an object");
  EnvConfig c;
  read_field(j, "kind", c.kind);
  if (c.kind == "cliff_corridor") {
    reject_unknown(j, {"kind", "width", "height", "slip", "horizon", "edge_cost", "inner_cost"});
    read_field(j, "width", c.cliff.width);
    read_field(j, "height", c.cliff.height);
    read_field(j, "slip", c.cliff.slip);
    read_field(j, "horizon", c.cliff.horizon);
    read_field(j, "edge_cost", c.cliff.edge_cost);
    read_field(j, "inner_cost", c.cliff.inner_cost);
  } else if (c.kind == "two_road") {
    reject_unknown(j, {"kind", "horizon", "narrow_length", "long_length", "step_cost"});
    read_field(j, "horizon", c.two_road.horizon);
    read_field(j, "narrow_length", c.two_road.narrow_length);
    read_field(j, "long_length", c.two_road.long_length);
    read_field(j, "step_cost", c.two_road.step_cost);
  } else if (c.kind == "random") {
    reject_unknown(j, {"kind", "states", "actions", "horizon", "seed", "sparsity", "class_size"});
    read_field(j, "states", c.random.states);
    read_field(j, "actions", c.random.actions);
    read_field(j, "horizon", c.random.horizon);
    read_field(j, "seed", c.random.seed);
    read_field(j, "sparsity", c.random.sparsity);
    read_field(j, "class_size", c.random.class_size);
  } else {
    throw std::invalid_argument("env.kind: unknown environment '" + c.kind + "'");
  }
  return c;
}

nlohmann::json to_json(const EnvConfig& c) {
  if (c.kind == "cliff_corridor") {
    return {{"kind", c.kind},           {"width", c.cliff.width},
            {"height", c.cliff.height}, {"slip", c.cliff.slip},
            {"horizon", c.cliff.horizon}, {"edge_cost", c.cliff.edge_cost},
            {"inner_cost", c.cliff.inner_cost}};
  }
  if (c.kind == "two_road") {
    return {{"kind", c.kind},
            {"horizon", c.two_road.horizon},
            {"narrow_length", c.two_road.narrow_length},
            {"long_length", c.two_road.long_length},
            {"step_cost", c.two_road.step_cost}};
  }
  return {{"kind", c.kind},         {"states", c.random.states},
          {"actions", c.random.actions}, {"horizon", c.random.horizon},
          {"seed", c.random.seed},   {"sparsity", c.random.sparsity},
          {"class_size", c.random.class_size}};
}

}  // namespace aggrevate
