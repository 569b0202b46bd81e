#include "aggrevate/features.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "aggrevate/mdp.hpp"

namespace aggrevate {

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kStateActionPlusTime:
      return "sa_onehot_plus_t";
    case FeatureKind::kStateActionTime:
      return "sat_onehot";
  }
  return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  if (name == "sa_onehot_plus_t") return FeatureKind::kStateActionPlusTime;
  if (name == "sat_onehot") return FeatureKind::kStateActionTime;
  throw std::invalid_argument("unknown feature map '" + name + "'");
}

std::size_t FeatureMap::dimension() const {
  const auto S = static_cast<std::size_t>(num_states);
  const auto A = static_cast<std::size_t>(num_actions);
  const auto T = static_cast<std::size_t>(horizon);
  switch (kind) {
    case FeatureKind::kStateActionPlusTime:
      return S * A + T;
    case FeatureKind::kStateActionTime:
      return S * A * T;
  }
  return 0;
}

ActiveFeatures FeatureMap::active(int s, int a, int t) const {
  if (s < 0 || s >= num_states || a < 0 || a >= num_actions || t < 1 || t > horizon) {
    throw DimensionError("feature query outside (state, action, time) range");
  }
  const auto sa = static_cast<std::size_t>(s) * num_actions + static_cast<std::size_t>(a);
  ActiveFeatures out;
  switch (kind) {
    case FeatureKind::kStateActionPlusTime:
      out.index = {sa, static_cast<std::size_t>(num_states) * num_actions + (t - 1)};
      out.count = 2;
      break;
    case FeatureKind::kStateActionTime:
      out.index = {sa * horizon + static_cast<std::size_t>(t - 1), 0};
      out.count = 1;
      break;
  }
  return out;
}

LinearQRegressor LinearQRegressor::zeros(const FeatureMap& features) {
  return {features, std::vector<double>(features.dimension(), 0.0)};
}

double LinearQRegressor::predict(int s, int a, int t) const {
  const auto f = features.active(s, a, t);
  double q = 0.0;
  for (int k = 0; k < f.count; ++k) q += weights[f.index[k]];
  return q;
}

nlohmann::json to_json(const FeatureMap& f) {
  return {{"kind", to_string(f.kind)},
          {"num_states", f.num_states},
          {"num_actions", f.num_actions},
          {"horizon", f.horizon}};
}

FeatureMap feature_map_from_json(const nlohmann::json& j) {
  FeatureMap f;
  f.kind = feature_kind_from_string(j.at("kind").get<std::string>());
  f.num_states = j.at("num_states").get<int>();
  f.num_actions = j.at("num_actions").get<int>();
  f.horizon = j.at("horizon").get<int>();
  return f;
}

nlohmann::json to_json(const LinearQRegressor& r) {
  return {{"feature_map", to_json(r.features)}, {"weights", r.weights}};
}

LinearQRegressor regressor_from_json(const nlohmann::json& j) {
  LinearQRegressor r;
  r.features = feature_map_from_json(j.at("feature_map"));
  r.weights = j.at("weights").get<std::vector<double>>();
  if (r.weights.size() != r.features.dimension()) {
    throw DimensionError("regressor weights do not match feature dimension");
  }
  return r;
}

}  // namespace aggrevate
