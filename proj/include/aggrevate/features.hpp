#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace aggrevate {

/// One-hot feature layouts over (state, action, time).
enum class FeatureKind {
  /// onehot(s,a) concatenated with onehot(t): dimension S*A + T.
  kStateActionPlusTime,
  /// onehot(s,a,t): dimension S*A*T. Represents every function of (s,a,t).
  kStateActionTime,
};

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Indices of the coordinates equal to 1; every other coordinate is 0.
struct ActiveFeatures {
  std::array<std::size_t, 2> index{};
  int count = 0;
};

struct FeatureMap {
  FeatureKind kind = FeatureKind::kStateActionPlusTime;
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;

  std::size_t dimension() const;
  /// t is wall-clock time in 1..T.
  ActiveFeatures active(int s, int a, int t) const;

  bool operator==(const FeatureMap&) const = default;
};

/// Linear cost-to-go predictor Qhat(s,a,t) = w . f(s,a,t).
struct LinearQRegressor {
  FeatureMap features;
  std::vector<double> weights;

  static LinearQRegressor zeros(const FeatureMap& features);

  double predict(int s, int a, int t) const;

  bool operator==(const LinearQRegressor&) const = default;
};

nlohmann::json to_json(const FeatureMap& f);
FeatureMap feature_map_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LinearQRegressor& r);
LinearQRegressor regressor_from_json(const nlohmann::json& j);

}  // namespace aggrevate
