// subcm/metrics.hpp

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

#ifndef SUBCM_METRICS_HPP_
#define SUBCM_METRICS_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "subcm/scores.hpp"

namespace subcm {

/// Operating points of a detector that accepts a trial as bonafide when
/// score >= threshold. Thresholds ascend from -inf to +inf: far
/// (spoof accepted) falls from 1 to 0 and frr (bonafide rejected) rises from
/// 0 to 1. One point per distinct score; the lowest score coincides with the
/// -inf sentinel and is folded into it.
struct ErrorCurve {
  std::vector<double> thresholds;
  std::vector<double> far;
  std::vector<double> frr;

  std::size_t size() const { return thresholds.size(); }
};

ErrorCurve ComputeErrorCurve(std::span<const double> bonafide,
                             std::span<const double> spoof);
ErrorCurve ComputeErrorCurve(const TrialScores& scores);

/// Equal error rate in [0, 1]: linear interpolation between the two adjacent
/// operating points where far - frr changes sign (or the exact point where
/// they are equal). Throws DataError unless both classes are present.
double ComputeEer(const ErrorCurve& curve);
double ComputeEer(std::span<const double> bonafide, std::span<const double> spoof);
double ComputeEer(const TrialScores& scores);

// ---------------------------------------------------------------------------
// Tandem detection cost.

enum class AsvTrialType { kTarget, kNontarget, kSpoof };

struct AsvTrial {
  std::string utterance_id;
  AsvTrialType type;
  double score;
};

struct AsvScoreSet {
  std::vector<AsvTrial> trials;
};

/// Reads "utterance_id trial_type score" lines with trial_type in
/// {target, nontarget, spoof}.
AsvScoreSet ReadAsvScoreFile(const std::filesystem::path& path);
void WriteAsvScoreFile(const AsvScoreSet& set, const std::filesystem::path& path);

struct AsvRates {
  double p_miss = 0.0;        // targets rejected
  double p_fa = 0.0;          // nontargets accepted
  double p_miss_spoof = 0.0;  // spoofs rejected

  bool operator==(const AsvRates&) const = default;
};

/// Rates at the ASV threshold of the target/nontarget EER: the operating
/// point minimizing |p_miss - p_fa|, lowest threshold on ties.
AsvRates AsvOperatingRates(const AsvScoreSet& set);

struct TdcfParams {
  double cost_miss_asv = 1.0;
  double cost_fa_asv = 10.0;
  double cost_miss_cm = 1.0;
  double cost_fa_cm = 10.0;
  double prior_target = 0.9405;
  double prior_nontarget = 0.0095;
  double prior_spoof = 0.05;
  AsvRates asv;

  void Validate() const;
  /// C1 weighs the CM miss rate, C2 the CM false alarm rate.
  double C1() const;
  double C2() const;
  nlohmann::json ToJson() const;
  static TdcfParams FromJson(const nlohmann::json& j);
  /// Short content hash embedded in metric reports.
  std::string Hash() const;
};

/// Normalized t-DCF (C1 p_miss_cm + C2 p_fa_cm) / min(C1, C2) at one CM
/// threshold.
double NormalizedTdcfAt(const TrialScores& cm, const TdcfParams& params,
                        double threshold);

/// Minimum over CM thresholds of the normalized t-DCF. Throws DataError when
/// C1 or C2 is not positive.
double MinTdcf(const TrialScores& cm, const TdcfParams& params);

struct MetricsReport {
  double eer_percent = 0.0;
  std::optional<double> min_tdcf;
  std::size_t n_bonafide = 0;
  std::size_t n_spoof = 0;
  std::string params_hash;

  nlohmann::json ToJson() const;
  static MetricsReport FromJson(const nlohmann::json& j);
};

/// EER always; min t-DCF only when `params` is given.
MetricsReport Evaluate(const TrialScores& scores,
                       const std::optional<TdcfParams>& params);

}  // namespace subcm

#endif  // SUBCM_METRICS_HPP_
