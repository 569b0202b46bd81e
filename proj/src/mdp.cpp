#include "aggrevate/mdp.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace aggrevate {
namespace {

std::string index_path(const char* name, int i) {
  return std::string(name) + "[" + std::to_string(i) + "]";
}

std::string index_path(const char* name, int i, int j) {
  return index_path(name, i) + "[" + std::to_string(j) + "]";
}

void check_distribution(const Vec& p, const std::string& path, std::size_t expected_size,
                        std::vector<Violation>& out) {
  if (p.size() != expected_size) {
    out.push_back({path, "expected " + std::to_string(expected_size) + " entries, got " +
                             std::to_string(p.size())});
    return;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!std::isfinite(p[k])) {
      out.push_back({path + "[" + std::to_string(k) + "]", "non-finite probability"});
      return;
    }
    if (p[k] < 0.0) {
      out.push_back({path + "[" + std::to_string(k) + "]", "negative probability"});
    }
    sum += p[k];
  }
  if (std::abs(sum - 1.0) > kValidationTol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probabilities sum to " << sum;
    out.push_back({path, msg.str()});
  }
}

}  // namespace

ValidationReport validate_mdp(const MdpSpec& spec) {
  ValidationReport report;
  auto& v = report.violations;
  if (spec.num_states <= 0) v.push_back({"num_states", "must be positive"});
  if (spec.num_actions <= 0) v.push_back({"num_actions", "must be positive"});
  if (spec.horizon <= 0) v.push_back({"horizon", "must be positive"});
  if (!v.empty()) return report;

  const auto S = static_cast<std::size_t>(spec.num_states);
  const auto A = static_cast<std::size_t>(spec.num_actions);

  if (spec.transitions.size() != S) {
    v.push_back({"transitions", "expected " + std::to_string(S) + " states"});
  } else {
    for (int s = 0; s < spec.num_states; ++s) {
      const auto& rows = spec.transitions[s];
      if (rows.size() != A) {
        v.push_back({index_path("transitions", s), "expected " + std::to_string(A) + " actions"});
        continue;
      }
      for (int a = 0; a < spec.num_actions; ++a) {
        check_distribution(rows[a], index_path("transitions", s, a), S, v);
      }
    }
  }

  if (spec.costs.size() != S) {
    v.push_back({"costs", "expected " + std::to_string(S) + " states"});
  } else {
    for (int s = 0; s < spec.num_states; ++s) {
      if (spec.costs[s].size() != A) {
        v.push_back({index_path("costs", s), "expected " + std::to_string(A) + " actions"});
        continue;
      }
      for (int a = 0; a < spec.num_actions; ++a) {
        const double c = spec.costs[s][a];
        if (!(c >= 0.0 && c <= 1.0)) {
          v.push_back({index_path("costs", s, a), "cost out of [0,1]"});
        }
      }
    }
  }

  check_distribution(spec.initial_dist, "initial_dist", S, v);
  return report;
}

void require_valid(const MdpSpec& spec) {
  const auto report = validate_mdp(spec);
  if (!report.ok()) {
    const auto& first = report.violations.front();
    throw std::invalid_argument("invalid MDP: " + first.path + ": " + first.message);
  }
}

nlohmann::json mdp_to_json(const MdpSpec& spec) {
  return nlohmann::json{{"num_states", spec.num_states},
                        {"num_actions", spec.num_actions},
                        {"horizon", spec.horizon},
                        {"transitions", spec.transitions},
                        {"costs", spec.costs},
                        {"initial_dist", spec.initial_dist}};
}

MdpSpec mdp_from_json(const nlohmann::json& j) {
  static const char* kFields[] = {"num_states", "num_actions", "horizon",
                                  "transitions", "costs", "initial_dist"};
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* f : kFields) known = known || key == f;
    if (!known) throw std::invalid_argument("unknown MDP field '" + key + "'");
  }
  MdpSpec spec;
  spec.num_states = j.at("num_states").get<int>();
  spec.num_actions = j.at("num_actions").get<int>();
  spec.horizon = j.at("horizon").get<int>();
  spec.transitions = j.at("transitions").get<std::vector<std::vector<Vec>>>();
  spec.costs = j.at("costs").get<Mat>();
  spec.initial_dist = j.at("initial_dist").get<Vec>();
  return spec;
}

std::string mdp_to_text(const MdpSpec& spec) { return mdp_to_json(spec).dump(2) + "\n"; }

MdpSpec mdp_from_text(const std::string& text) {
  return mdp_from_json(nlohmann::json::parse(text));
}

}  // namespace aggrevate
