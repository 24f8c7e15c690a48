// subcm/fusion.hpp

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

#ifndef SUBCM_FUSION_HPP_
#define SUBCM_FUSION_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "subcm/scores.hpp"

namespace subcm {

struct FusionWeights {
  std::vector<double> weights;
  double offset = 0.0;

  nlohmann::json ToJson() const;
  static FusionWeights FromJson(const nlohmann::json& j);
};

/// Per-utterance sum of the systems' scores, in the order of the first set.
/// All sets must cover the same utterance ids; otherwise DataError lists
/// the symmetric difference.
TrialScores FuseLinear(std::span<const TrialScores> systems);

/// offset + sum_i w_i s_i per utterance.
TrialScores FuseWeighted(std::span<const TrialScores> systems,
                         const FusionWeights& weights);

struct LogisticFitOptions {
  double l2 = 1e-3;             // on the weights, not on the offset
  double grad_tolerance = 1e-6;
  int max_iterations = 10000;
  double effective_prior = 0.5;  // bonafide prior the class weights emulate
};

struct LogisticFitTrace {
  std::vector<double> objective;  // one value per accepted iterate
  double grad_norm = 0.0;
  int iterations = 0;
};

/// Prior-weighted, L2-regularized logistic regression of the labels on the
/// raw system scores:
///   J(w, b) = sum_i c_i log(1 + exp(-y_i (b + w.s_i))) + l2/2 |w|^2
/// with y in {+1 bonafide, -1 spoof} and class weights c_i making each class
/// carry total weight N * prior (N = number of trials). Minimized by
/// accelerated gradient descent with backtracking and a monotone restart,
/// so the objective never increases. Throws DataError on single-class data.
FusionWeights FitLogisticFusion(std::span<const TrialScores> dev_systems,
                                const LogisticFitOptions& options = {},
                                LogisticFitTrace* trace = nullptr);

/// The objective J above, exposed for verification.
double LogisticFusionObjective(std::span<const TrialScores> dev_systems,
                               const FusionWeights& weights,
                               const LogisticFitOptions& options = {});

}  // namespace subcm

#endif  // SUBCM_FUSION_HPP_
