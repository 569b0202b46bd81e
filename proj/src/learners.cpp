#include "aggrevate/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <nlohmann/json.hpp>

namespace aggrevate {

FinitePolicyClass FinitePolicyClass::uniform(std::vector<Policy> members) {
  if (members.empty()) throw std::invalid_argument("policy class must be nonempty");
  const double w = 1.0 / static_cast<double>(members.size());
  Vec weights(members.size(), w);
  return {std::move(members), std::move(weights)};
}

double empirical_cs_loss(std::span<const CostToGoExample> examples, const Policy& pi) {
  if (examples.empty()) throw std::invalid_argument("empirical_cs_loss: no examples");
  const double scale = pi.num_actions();
  double total = 0.0;
  for (const auto& ex : examples) {
    const double p = pi.action_distribution(ex.state, ex.time)[static_cast<std::size_t>(ex.action)];
    total += scale * ex.q_estimate * p;
  }
  return total / static_cast<double>(examples.size());
}

Vec member_cs_losses(std::span<const CostToGoExample> examples, const FinitePolicyClass& cls) {
  Vec out;
  out.reserve(cls.size());
  for (const auto& m : cls.members) out.push_back(empirical_cs_loss(examples, m));
  return out;
}

double zero_one_loss(std::span<const ImitationExample> examples, const Policy& pi) {
  if (examples.empty()) throw std::invalid_argument("zero_one_loss: no examples");
  double total = 0.0;
  for (const auto& ex : examples) {
    total += 1.0 - pi.action_distribution(ex.state, ex.time)[static_cast<std::size_t>(ex.expert_action)];
  }
  return total / static_cast<double>(examples.size());
}

Vec member_zero_one_losses(std::span<const ImitationExample> examples,
                           const FinitePolicyClass& cls) {
  Vec out;
  out.reserve(cls.size());
  for (const auto& m : cls.members) out.push_back(zero_one_loss(examples, m));
  return out;
}

namespace {

ClassChoice choose_lowest(Vec losses) {
  ClassChoice out;
  out.index = static_cast<std::size_t>(argmin_action(losses));
  out.losses = std::move(losses);
  return out;
}

void require_nonempty_class(const FinitePolicyClass& cls) {
  if (cls.members.empty()) throw std::invalid_argument("policy class must be nonempty");
}

}  // namespace

ClassChoice ftl_select(const AggregatedDataset& dataset, const FinitePolicyClass& cls) {
  require_nonempty_class(cls);
  if (dataset.empty()) throw std::invalid_argument("ftl_select: empty dataset");
  const auto flat = dataset.flattened();
  return choose_lowest(member_cs_losses(flat, cls));
}

ClassChoice ftl_select_zero_one(const ImitationDataset& dataset, const FinitePolicyClass& cls) {
  require_nonempty_class(cls);
  if (dataset.empty()) throw std::invalid_argument("ftl_select_zero_one: empty dataset");
  const auto flat = dataset.flattened();
  return choose_lowest(member_zero_one_losses(flat, cls));
}

Vec hedge_update(const FinitePolicyClass& cls, const Vec& round_losses, double eta) {
  require_nonempty_class(cls);
  if (round_losses.size() != cls.weights.size()) {
    throw DimensionError("hedge_update: one loss per member expected");
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("hedge_update: eta > 0");
  double min_loss = std::numeric_limits<double>::infinity();
  for (double l : round_losses) {
    if (!std::isfinite(l)) throw std::invalid_argument("hedge_update: non-finite loss");
    min_loss = std::min(min_loss, l);
  }
  Vec out(cls.weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = cls.weights[k] * std::exp(-eta * (round_losses[k] - min_loss));
    total += out[k];
  }
  for (double& w : out) w /= total;
  return out;
}

double hedge_default_eta(std::size_t num_members, int num_rounds, double loss_range) {
  if (num_rounds < 1 || !(loss_range > 0.0)) {
    throw std::invalid_argument("hedge_default_eta: need N >= 1 and a positive loss range");
  }
  const double k = static_cast<double>(std::max<std::size_t>(num_members, 2));
  return std::sqrt(8.0 * std::log(k) / num_rounds) / loss_range;
}

double squared_loss(const LinearQRegressor& reg, std::span<const CostToGoExample> batch) {
  if (batch.empty()) throw std::invalid_argument("squared_loss: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    const double r = reg.predict(ex.state, ex.action, ex.time) - ex.q_estimate;
    total += r * r;
  }
  return total / static_cast<double>(batch.size());
}

Vec squared_loss_gradient(const LinearQRegressor& reg, std::span<const CostToGoExample> batch) {
  if (batch.empty()) throw std::invalid_argument("squared_loss_gradient: empty batch");
  Vec grad(reg.weights.size(), 0.0);
  const double scale = 2.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    if (!std::isfinite(ex.q_estimate)) {
      throw std::invalid_argument("squared_loss_gradient: non-finite target");
    }
    const auto f = reg.features.active(ex.state, ex.action, ex.time);
    const double r = reg.predict(ex.state, ex.action, ex.time) - ex.q_estimate;
    for (int k = 0; k < f.count; ++k) grad[f.index[k]] += scale * r;
  }
  return grad;
}

RegressionStep ogd_regression_update(const LinearQRegressor& reg,
                                     std::span<const CostToGoExample> batch, double step_size) {
  if (!(step_size >= 0.0)) throw std::invalid_argument("ogd_regression_update: step_size >= 0");
  if (reg.weights.size() != reg.features.dimension()) {
    throw DimensionError("ogd_regression_update: weights do not match feature dimension");
  }
  for (double w : reg.weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("ogd_regression_update: non-finite weight");
  }
  RegressionStep out{reg, squared_loss(reg, batch)};
  const Vec grad = squared_loss_gradient(reg, batch);
  for (std::size_t i = 0; i < grad.size(); ++i) out.updated.weights[i] -= step_size * grad[i];
  return out;
}

LinearQRegressor fit_ridge(const FeatureMap& features, std::span<const CostToGoExample> examples,
                           double ridge) {
  if (!(ridge > 0.0)) throw std::invalid_argument("fit_ridge: ridge must be positive");
  const auto dim = static_cast<Eigen::Index>(features.dimension());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(examples.size() * 4 + static_cast<std::size_t>(dim));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (const auto& ex : examples) {
    if (!std::isfinite(ex.q_estimate)) throw std::invalid_argument("fit_ridge: non-finite target");
    const auto f = features.active(ex.state, ex.action, ex.time);
    for (int i = 0; i < f.count; ++i) {
      const auto row = static_cast<Eigen::Index>(f.index[i]);
      rhs[row] += ex.q_estimate;
      for (int k = 0; k < f.count; ++k) {
        entries.emplace_back(row, static_cast<Eigen::Index>(f.index[k]), 1.0);
      }
    }
  }
  for (Eigen::Index i = 0; i < dim; ++i) entries.emplace_back(i, i, ridge);
  Eigen::SparseMatrix<double> normal(dim, dim);
  normal.setFromTriplets(entries.begin(), entries.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
  if (solver.info() != Eigen::Success) throw std::runtime_error("fit_ridge: factorization failed");
  const Eigen::VectorXd w = solver.solve(rhs);
  LinearQRegressor out = LinearQRegressor::zeros(features);
  for (Eigen::Index i = 0; i < dim; ++i) out.weights[static_cast<std::size_t>(i)] = w[i];
  return out;
}

std::vector<CostToGoExample> indicator_targets(std::span<const ImitationExample> examples,
                                               int num_actions) {
  std::vector<CostToGoExample> out;
  out.reserve(examples.size() * static_cast<std::size_t>(num_actions));
  for (const auto& ex : examples) {
    for (int a = 0; a < num_actions; ++a) {
      out.push_back({ex.state, ex.time, a, a == ex.expert_action ? 0.0 : 1.0});
    }
  }
  return out;
}

Policy argmax_policy(const LinearQRegressor& reg) { return Policy::linear_argmin(reg); }

RegretTerms regret_terms(const Vec& chosen_losses, const Mat& member_losses) {
  if (chosen_losses.empty()) throw std::invalid_argument("regret_terms: need at least one round");
  if (member_losses.size() != chosen_losses.size()) {
    throw DimensionError("regret_terms: rounds disagree");
  }
  const std::size_t K = member_losses.front().size();
  if (K == 0) throw DimensionError("regret_terms: no members");
  Vec totals(K, 0.0);
  for (const auto& row : member_losses) {
    if (row.size() != K) throw DimensionError("regret_terms: ragged member losses");
    for (std::size_t k = 0; k < K; ++k) totals[k] += row[k];
  }
  const double n = static_cast<double>(chosen_losses.size());
  RegretTerms out;
  for (double l : chosen_losses) out.avg_learner_loss += l;
  out.avg_learner_loss /= n;
  out.best_member = static_cast<std::size_t>(argmin_action(totals));
  out.best_fixed_loss = totals[out.best_member] / n;
  out.eps_regret = out.avg_learner_loss - out.best_fixed_loss;
  return out;
}

nlohmann::json to_json(const FinitePolicyClass& cls) {
  auto members = nlohmann::json::array();
  for (const auto& m : cls.members) members.push_back(to_json(m));
  return {{"members", std::move(members)}, {"weights", cls.weights}};
}

FinitePolicyClass policy_class_from_json(const nlohmann::json& j) {
  FinitePolicyClass cls;
  for (const auto& m : j.at("members")) cls.members.push_back(policy_from_json(m));
  cls.weights = j.at("weights").get<Vec>();
  if (cls.members.empty() || cls.weights.size() != cls.members.size()) {
    throw DimensionError("policy class needs one weight per member");
  }
  return cls;
}

}  // namespace aggrevate
