#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aggrevate/features.hpp"
#include "aggrevate/policy.hpp"
#include "aggrevate/sampling.hpp"

namespace aggrevate {

/// Append-only sequence of per-round batches D_1..D_n.
template <class Example>
class Aggregated {
 public:
  void append(std::vector<Example> batch) {
    size_ += batch.size();
    rounds_.push_back(std::move(batch));
  }
  const std::vector<std::vector<Example>>& rounds() const { return rounds_; }
  std::size_t num_rounds() const { return rounds_.size(); }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  std::vector<Example> flattened() const {
    std::vector<Example> out;
    out.reserve(size_);
    for (const auto& r : rounds_) out.insert(out.end(), r.begin(), r.end());
    return out;
  }

 private:
  std::vector<std::vector<Example>> rounds_;
  std::size_t size_ = 0;
};

using AggregatedDataset = Aggregated<CostToGoExample>;
using ImitationDataset = Aggregated<ImitationExample>;

/// Finite hypothesis class with exponential-weights state.
struct FinitePolicyClass {
  std::vector<Policy> members;
  Vec weights;

  static FinitePolicyClass uniform(std::vector<Policy> members);
  std::size_t size() const { return members.size(); }
};

/// Importance-weighted cost-sensitive loss under uniform action exploration:
/// each record contributes |A| * q_estimate * pi(action | state, time).
double empirical_cs_loss(std::span<const CostToGoExample> examples, const Policy& pi);
Vec member_cs_losses(std::span<const CostToGoExample> examples, const FinitePolicyClass& cls);

/// Fraction of records where pi disagrees with the expert (expected 0-1 loss
/// for randomized policies).
double zero_one_loss(std::span<const ImitationExample> examples, const Policy& pi);
Vec member_zero_one_losses(std::span<const ImitationExample> examples,
                           const FinitePolicyClass& cls);

struct ClassChoice {
  std::size_t index = 0;
  Vec losses;  // per member, on the flattened data
};

/// Follow-the-leader over the aggregate; lowest index wins ties.
ClassChoice ftl_select(const AggregatedDataset& dataset, const FinitePolicyClass& cls);
ClassChoice ftl_select_zero_one(const ImitationDataset& dataset, const FinitePolicyClass& cls);

/// w'_k proportional to w_k exp(-eta * loss_k). Returns new weights.
Vec hedge_update(const FinitePolicyClass& cls, const Vec& round_losses, double eta);

/// sqrt(8 ln K / N) / loss_range.
double hedge_default_eta(std::size_t num_members, int num_rounds, double loss_range);

/// (1/m) sum_j (Qhat(s_j, a_j, t_j) - q_j)^2
double squared_loss(const LinearQRegressor& reg, std::span<const CostToGoExample> batch);
Vec squared_loss_gradient(const LinearQRegressor& reg, std::span<const CostToGoExample> batch);

struct RegressionStep {
  LinearQRegressor updated;
  double batch_loss = 0.0;  // loss of the regressor before the step
};

/// One online gradient step on the batch squared loss.
RegressionStep ogd_regression_update(const LinearQRegressor& reg,
                                     std::span<const CostToGoExample> batch, double step_size);

/// argmin_w sum_j (w . f_j - q_j)^2 + ridge * |w|^2 over all examples.
LinearQRegressor fit_ridge(const FeatureMap& features, std::span<const CostToGoExample> examples,
                           double ridge);

/// Ridge used when a fit stands in for the exact least-squares minimizer.
inline constexpr double kLeastSquaresRidge = 1e-9;

/// Full-information indicator targets: every action gets q = 0 for the
/// expert's action and 1 otherwise.
std::vector<CostToGoExample> indicator_targets(std::span<const ImitationExample> examples,
                                               int num_actions);

/// pi(s,t) = argmin_a Qhat(s,a,t), lowest index on ties.
Policy argmax_policy(const LinearQRegressor& reg);

struct RegretTerms {
  double avg_learner_loss = 0.0;
  double best_fixed_loss = 0.0;
  std::size_t best_member = 0;
  double eps_regret = 0.0;
};

/// chosen_losses[i]: loss of the learner's play in round i.
/// member_losses[i][k]: loss of fixed member k in round i.
/// The comparator is the best fixed member over all rounds, never a per-round
/// best.
RegretTerms regret_terms(const Vec& chosen_losses, const Mat& member_losses);

nlohmann::json to_json(const FinitePolicyClass& cls);
FinitePolicyClass policy_class_from_json(const nlohmann::json& j);

}  // namespace aggrevate
