// subcm/fusion.cpp

// Copyright 2026  The subcm Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "subcm/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Core>

namespace subcm {
namespace {

// Aligns every system to the utterance order of the first one.
struct Aligned {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  Eigen::MatrixXd scores;  // trials x systems
};

Aligned Align(std::span<const TrialScores> systems) {
  if (systems.empty()) throw DataError("fusion needs at least one system");
  for (const auto& s : systems) s.Validate();
  const TrialScores& ref = systems.front();
  Aligned a;
  a.scores.resize(static_cast<Eigen::Index>(ref.entries.size()),
                  static_cast<Eigen::Index>(systems.size()));
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ref.entries.size(); ++i) {
    index[ref.entries[i].utterance_id] = i;
    a.ids.push_back(ref.entries[i].utterance_id);
    a.labels.push_back(ref.entries[i].label);
  }
  for (std::size_t k = 0; k < systems.size(); ++k) {
    std::set<std::string> missing;
    for (const auto& id : a.ids) missing.insert(id);
    std::vector<std::string> extra;
    for (const auto& e : systems[k].entries) {
      auto it = index.find(e.utterance_id);
      if (it == index.end()) {
        extra.push_back(e.utterance_id);
        continue;
      }
      missing.erase(e.utterance_id);
      a.scores(Eigen::Index(it->second), Eigen::Index(k)) = e.score;
      if (a.labels[it->second] == Label::kUnknown) a.labels[it->second] = e.label;
    }
    if (!missing.empty() || !extra.empty()) {
      std::string msg = "utterance ids of '" + systems[k].source +
                        "' differ from '" + ref.source + "': ";
      for (const auto& id : missing) msg += "-" + id + " ";
      for (const auto& id : extra) msg += "+" + id + " ";
      throw DataError(msg);
    }
  }
  return a;
}

TrialScores FromAligned(const Aligned& a, const Eigen::VectorXd& fused,
                        std::string source) {
  TrialScores out;
  out.source = std::move(source);
  for (std::size_t i = 0; i < a.ids.size(); ++i)
    out.entries.push_back({a.ids[i], fused(Eigen::Index(i)), a.labels[i]});
  return out;
}

std::string JoinSources(std::span<const TrialScores> systems, const char* op) {
  std::string s = op;
  s += "(";
  for (std::size_t k = 0; k < systems.size(); ++k)
    s += (k ? "," : "") + systems[k].source;
  return s + ")";
}

struct LogisticProblem {
  Eigen::MatrixXd x;      // trials x systems
  Eigen::VectorXd y;      // +1 / -1
  Eigen::VectorXd c;      // class weights
  double l2;

  // Objective and gradient at theta = [w..., b].
  double Eval(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const Eigen::Index d = x.cols();
    const Eigen::VectorXd w = theta.head(d);
    const double b = theta(d);
    const Eigen::VectorXd margin = (y.array() * ((x * w).array() + b)).matrix();
    double value = 0.5 * l2 * w.squaredNorm();
    Eigen::VectorXd coef(margin.size());
    for (Eigen::Index i = 0; i < margin.size(); ++i) {
      const double m = margin(i);
      // log(1 + exp(-m)) and its derivative -sigmoid(-m), both stable.
      value += c(i) * (m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)));
      const double s = m > 0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
      coef(i) = -c(i) * y(i) * s;
    }
    if (grad != nullptr) {
      grad->resize(d + 1);
      grad->head(d) = x.transpose() * coef + l2 * w;
      (*grad)(d) = coef.sum();
    }
    return value;
  }
};

LogisticProblem MakeProblem(std::span<const TrialScores> systems,
                            const LogisticFitOptions& options) {
  Aligned a = Align(systems);
  LogisticProblem p;
  p.l2 = options.l2;
  p.x = a.scores;
  const auto n = static_cast<Eigen::Index>(a.ids.size());
  p.y.resize(n);
  p.c.resize(n);
  double n_bona = 0, n_spoof = 0;
  for (Label l : a.labels) {
    if (l == Label::kBonafide) ++n_bona;
    else if (l == Label::kSpoof) ++n_spoof;
    else throw DataError("fusion training needs labeled scores");
  }
  if (n_bona == 0 || n_spoof == 0)
    throw DataError("fusion training needs both bonafide and spoof trials");
  const double total = double(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool bona = a.labels[std::size_t(i)] == Label::kBonafide;
    p.y(i) = bona ? 1.0 : -1.0;
    p.c(i) = bona ? total * options.effective_prior / n_bona
                  : total * (1.0 - options.effective_prior) / n_spoof;
  }
  return p;
}

}  // namespace

nlohmann::json FusionWeights::ToJson() const {
  return {{"weights", weights}, {"offset", offset}};
}

FusionWeights FusionWeights::FromJson(const nlohmann::json& j) {
  try {
    FusionWeights w;
    w.weights = j.at("weights").get<std::vector<double>>();
    w.offset = j.at("offset").get<double>();
    for (double v : w.weights)
      if (!std::isfinite(v)) throw DataError("non-finite fusion weight");
    if (!std::isfinite(w.offset)) throw DataError("non-finite fusion offset");
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad fusion weights: ") + e.what());
  }
}

TrialScores FuseLinear(std::span<const TrialScores> systems) {
  const Aligned a = Align(systems);
  Eigen::VectorXd fused = Eigen::VectorXd::Zero(a.scores.rows());
  for (Eigen::Index k = 0; k < a.scores.cols(); ++k) fused += a.scores.col(k);
  return FromAligned(a, fused, JoinSources(systems, "ls"));
}

TrialScores FuseWeighted(std::span<const TrialScores> systems,
                         const FusionWeights& weights) {
  if (weights.weights.size() != systems.size())
    throw ConfigError("fusion weights for " + std::to_string(weights.weights.size()) +
                      " systems applied to " + std::to_string(systems.size()));
  const Aligned a = Align(systems);
  Eigen::VectorXd fused = Eigen::VectorXd::Constant(a.scores.rows(), weights.offset);
  for (Eigen::Index k = 0; k < a.scores.cols(); ++k)
    fused += weights.weights[std::size_t(k)] * a.scores.col(k);
  return FromAligned(a, fused, JoinSources(systems, "wls"));
}

double LogisticFusionObjective(std::span<const TrialScores> dev_systems,
                               const FusionWeights& weights,
                               const LogisticFitOptions& options) {
  const LogisticProblem p = MakeProblem(dev_systems, options);
  Eigen::VectorXd theta(p.x.cols() + 1);
  for (Eigen::Index k = 0; k < p.x.cols(); ++k) theta(k) = weights.weights.at(std::size_t(k));
  theta(p.x.cols()) = weights.offset;
  return p.Eval(theta, nullptr);
}

FusionWeights FitLogisticFusion(std::span<const TrialScores> dev_systems,
                                const LogisticFitOptions& options,
                                LogisticFitTrace* trace) {
  LogisticProblem p = MakeProblem(dev_systems, options);
  const Eigen::Index dim = p.x.cols() + 1;
  // Optimize over centered scores; the offset absorbs the means. This is an
  // exact reparameterization (the penalty does not touch the offset) that
  // decouples constant systems from the offset.
  const Eigen::RowVectorXd means = p.x.colwise().mean();
  p.x.rowwise() -= means;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd grad;
  double value = p.Eval(theta, &grad);
  if (trace) trace->objective.assign(1, value);

  // Accelerated gradient with backtracking on the step and a restart of the
  // momentum whenever the candidate would not decrease the objective.
  Eigen::VectorXd momentum_point = theta;
  Eigen::VectorXd momentum_grad = grad;
  double momentum_value = value;
  double t = 1.0;
  double step = 1.0;
  int it = 0;
  for (; it < options.max_iterations && grad.norm() >= options.grad_tolerance; ++it) {
    Eigen::VectorXd candidate;
    double candidate_value;
    // Backtracking from the extrapolated point.
    while (true) {
      candidate = momentum_point - step * momentum_grad;
      candidate_value = p.Eval(candidate, nullptr);
      const double decrease = momentum_grad.dot(momentum_point - candidate) -
                              0.5 / step * (candidate - momentum_point).squaredNorm();
      if (candidate_value <= momentum_value - decrease + 1e-15 * std::abs(momentum_value) ||
          step < 1e-20)
        break;
      step *= 0.5;
    }
    if (candidate_value > value) {
      // Restart from the last accepted iterate with a plain gradient step.
      t = 1.0;
      momentum_point = theta;
      momentum_grad = grad;
      momentum_value = value;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Eigen::VectorXd previous = theta;
    theta = candidate;
    value = p.Eval(theta, &grad);
    if (trace) trace->objective.push_back(value);
    momentum_point = theta + ((t - 1.0) / t_next) * (theta - previous);
    momentum_value = p.Eval(momentum_point, &momentum_grad);
    t = t_next;
    step *= 1.25;  // let the step grow back after backtracking
  }
  if (trace) {
    trace->grad_norm = grad.norm();
    trace->iterations = it;
  }
  FusionWeights w;
  w.weights.assign(theta.data(), theta.data() + p.x.cols());
  w.offset = theta(p.x.cols()) - means.dot(theta.head(p.x.cols()));
  return w;
}

}  // namespace subcm
