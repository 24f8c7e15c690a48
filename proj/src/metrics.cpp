// subcm/metrics.cpp

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

#include "subcm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "subcm/hash.hpp"

namespace subcm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t CountBelow(const std::vector<double>& sorted, double threshold) {
  return static_cast<std::size_t>(
      std::lower_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin());
}

void RequireBothClasses(std::size_t n_bonafide, std::size_t n_spoof) {
  if (n_bonafide == 0 || n_spoof == 0)
    throw DataError("metric needs both bonafide and spoof trials (got " +
                    std::to_string(n_bonafide) + " bonafide, " +
                    std::to_string(n_spoof) + " spoof)");
}

AsvTrialType ParseTrialType(const std::string& token) {
  if (token == "target") return AsvTrialType::kTarget;
  if (token == "nontarget") return AsvTrialType::kNontarget;
  if (token == "spoof") return AsvTrialType::kSpoof;
  throw DataError("unknown ASV trial type '" + token + "'");
}

std::string_view TrialTypeName(AsvTrialType type) {
  switch (type) {
    case AsvTrialType::kTarget: return "target";
    case AsvTrialType::kNontarget: return "nontarget";
    case AsvTrialType::kSpoof: return "spoof";
  }
  return "spoof";
}

}  // namespace

ErrorCurve ComputeErrorCurve(std::span<const double> bonafide,
                             std::span<const double> spoof) {
  RequireBothClasses(bonafide.size(), spoof.size());
  std::vector<double> bona(bonafide.begin(), bonafide.end());
  std::vector<double> spf(spoof.begin(), spoof.end());
  std::sort(bona.begin(), bona.end());
  std::sort(spf.begin(), spf.end());
  std::vector<double> all(bona);
  all.insert(all.end(), spf.begin(), spf.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const double nb = static_cast<double>(bona.size());
  const double ns = static_cast<double>(spf.size());
  ErrorCurve curve;
  auto push = [&](double threshold) {
    curve.thresholds.push_back(threshold);
    curve.far.push_back((ns - double(CountBelow(spf, threshold))) / ns);
    curve.frr.push_back(double(CountBelow(bona, threshold)) / nb);
  };
  push(-kInf);
  for (std::size_t i = 1; i < all.size(); ++i) push(all[i]);
  push(kInf);
  return curve;
}

ErrorCurve ComputeErrorCurve(const TrialScores& scores) {
  return ComputeErrorCurve(scores.ScoresOf(Label::kBonafide),
                           scores.ScoresOf(Label::kSpoof));
}

double ComputeEer(const ErrorCurve& curve) {
  for (std::size_t j = 1; j < curve.size(); ++j) {
    const double gap = curve.far[j] - curve.frr[j];
    if (gap == 0.0) return curve.far[j];
    if (gap < 0.0) {
      const double prev_gap = curve.far[j - 1] - curve.frr[j - 1];
      const double alpha = prev_gap / (prev_gap - gap);
      return curve.far[j - 1] + alpha * (curve.far[j] - curve.far[j - 1]);
    }
  }
  throw DataError("error curve never crosses");  // unreachable with sentinels
}

double ComputeEer(std::span<const double> bonafide, std::span<const double> spoof) {
  return ComputeEer(ComputeErrorCurve(bonafide, spoof));
}

double ComputeEer(const TrialScores& scores) {
  return ComputeEer(ComputeErrorCurve(scores));
}

// ---------------------------------------------------------------------------

AsvScoreSet ReadAsvScoreFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ASV score file " + path.string());
  AsvScoreSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string id, type, value, extra;
    if (!(fields >> id >> type >> value) || (fields >> extra))
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 'utterance_id trial_type score'");
    AsvTrial t{id, ParseTrialType(type), 0.0};
    try {
      std::size_t used = 0;
      t.score = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": bad score '" + value + "'");
    }
    set.trials.push_back(std::move(t));
  }
  return set;
}

void WriteAsvScoreFile(const AsvScoreSet& set, const std::filesystem::path& path) {
  std::string out;
  for (const auto& t : set.trials)
    out += fmt::format("{} {} {:.6f}\n", t.utterance_id, TrialTypeName(t.type), t.score);
  WriteFileBytes(path, out);
}

AsvRates AsvOperatingRates(const AsvScoreSet& set) {
  std::vector<double> tar, non, spf;
  for (const auto& t : set.trials) {
    switch (t.type) {
      case AsvTrialType::kTarget: tar.push_back(t.score); break;
      case AsvTrialType::kNontarget: non.push_back(t.score); break;
      case AsvTrialType::kSpoof: spf.push_back(t.score); break;
    }
  }
  if (tar.empty() || non.empty() || spf.empty())
    throw DataError("ASV scores need target, nontarget and spoof trials");
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::sort(spf.begin(), spf.end());
  std::vector<double> candidates(tar);
  candidates.insert(candidates.end(), non.begin(), non.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  candidates.push_back(kInf);

  const double nt = double(tar.size()), nn = double(non.size());
  double best_threshold = candidates.front();
  double best_gap = kInf;
  for (double threshold : candidates) {
    const double p_miss = double(CountBelow(tar, threshold)) / nt;
    const double p_fa = (nn - double(CountBelow(non, threshold))) / nn;
    const double gap = std::abs(p_miss - p_fa);
    if (gap < best_gap) {
      best_gap = gap;
      best_threshold = threshold;
    }
  }
  AsvRates rates;
  rates.p_miss = double(CountBelow(tar, best_threshold)) / nt;
  rates.p_fa = (nn - double(CountBelow(non, best_threshold))) / nn;
  rates.p_miss_spoof = double(CountBelow(spf, best_threshold)) / double(spf.size());
  return rates;
}

void TdcfParams::Validate() const {
  for (double c : {cost_miss_asv, cost_fa_asv, cost_miss_cm, cost_fa_cm})
    if (!(c > 0.0)) throw ConfigError("t-DCF costs must be positive");
  for (double p : {prior_target, prior_nontarget, prior_spoof})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("t-DCF priors must be in [0, 1]");
  if (std::abs(prior_target + prior_nontarget + prior_spoof - 1.0) > 1e-9)
    throw ConfigError("t-DCF priors must sum to 1");
  for (double r : {asv.p_miss, asv.p_fa, asv.p_miss_spoof})
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("ASV rates must be in [0, 1]");
}

double TdcfParams::C1() const {
  return prior_target * (cost_miss_cm - cost_miss_asv * asv.p_miss) -
         prior_nontarget * cost_fa_asv * asv.p_fa;
}

double TdcfParams::C2() const {
  return cost_fa_cm * prior_spoof * (1.0 - asv.p_miss_spoof);
}

nlohmann::json TdcfParams::ToJson() const {
  return {{"cost_miss_asv", cost_miss_asv},
          {"cost_fa_asv", cost_fa_asv},
          {"cost_miss_cm", cost_miss_cm},
          {"cost_fa_cm", cost_fa_cm},
          {"prior_target", prior_target},
          {"prior_nontarget", prior_nontarget},
          {"prior_spoof", prior_spoof},
          {"asv_rates",
           {{"p_miss", asv.p_miss}, {"p_fa", asv.p_fa}, {"p_miss_spoof", asv.p_miss_spoof}}}};
}

TdcfParams TdcfParams::FromJson(const nlohmann::json& j) {
  TdcfParams p;
  try {
    p.cost_miss_asv = j.value("cost_miss_asv", p.cost_miss_asv);
    p.cost_fa_asv = j.value("cost_fa_asv", p.cost_fa_asv);
    p.cost_miss_cm = j.value("cost_miss_cm", p.cost_miss_cm);
    p.cost_fa_cm = j.value("cost_fa_cm", p.cost_fa_cm);
    p.prior_target = j.value("prior_target", p.prior_target);
    p.prior_nontarget = j.value("prior_nontarget", p.prior_nontarget);
    p.prior_spoof = j.value("prior_spoof", p.prior_spoof);
    if (j.contains("asv_rates")) {
      const auto& r = j.at("asv_rates");
      p.asv.p_miss = r.at("p_miss");
      p.asv.p_fa = r.at("p_fa");
      p.asv.p_miss_spoof = r.at("p_miss_spoof");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad t-DCF parameters: ") + e.what());
  }
  p.Validate();
  return p;
}

std::string TdcfParams::Hash() const {
  return Sha256Hex(ToJson().dump()).substr(0, 12);
}

namespace {

void CheckCoefficients(const TdcfParams& params) {
  params.Validate();
  const double c1 = params.C1(), c2 = params.C2();
  if (!(c1 > 0.0) || !(c2 > 0.0))
    throw DataError(fmt::format(
        "degenerate ASV operating point: C1={:.6g}, C2={:.6g} (p_miss={}, "
        "p_fa={}, p_miss_spoof={}); t-DCF is undefined",
        c1, c2, params.asv.p_miss, params.asv.p_fa, params.asv.p_miss_spoof));
}

}  // namespace

double NormalizedTdcfAt(const TrialScores& cm, const TdcfParams& params,
                        double threshold) {
  CheckCoefficients(params);
  const auto bona = cm.ScoresOf(Label::kBonafide);
  const auto spf = cm.ScoresOf(Label::kSpoof);
  RequireBothClasses(bona.size(), spf.size());
  const double p_miss = double(std::count_if(bona.begin(), bona.end(),
                                             [&](double s) { return s < threshold; })) /
                        double(bona.size());
  const double p_fa = double(std::count_if(spf.begin(), spf.end(),
                                           [&](double s) { return s >= threshold; })) /
                      double(spf.size());
  const double c1 = params.C1(), c2 = params.C2();
  return (c1 * p_miss + c2 * p_fa) / std::min(c1, c2);
}

double MinTdcf(const TrialScores& cm, const TdcfParams& params) {
  CheckCoefficients(params);
  const ErrorCurve curve = ComputeErrorCurve(cm);
  const double c1 = params.C1(), c2 = params.C2();
  double best = kInf;
  for (std::size_t j = 0; j < curve.size(); ++j)
    best = std::min(best, c1 * curve.frr[j] + c2 * curve.far[j]);
  return best / std::min(c1, c2);
}

nlohmann::json MetricsReport::ToJson() const {
  nlohmann::json j{{"eer_percent", eer_percent},
                   {"n_bonafide", n_bonafide},
                   {"n_spoof", n_spoof},
                   {"params_hash", params_hash}};
  j["min_tdcf"] = min_tdcf ? nlohmann::json(*min_tdcf) : nlohmann::json();
  return j;
}

MetricsReport MetricsReport::FromJson(const nlohmann::json& j) {
  MetricsReport r;
  r.eer_percent = j.at("eer_percent");
  if (!j.at("min_tdcf").is_null()) r.min_tdcf = j.at("min_tdcf").get<double>();
  r.n_bonafide = j.at("n_bonafide");
  r.n_spoof = j.at("n_spoof");
  r.params_hash = j.at("params_hash");
  return r;
}

MetricsReport Evaluate(const TrialScores& scores,
                       const std::optional<TdcfParams>& params) {
  MetricsReport r;
  r.eer_percent = 100.0 * ComputeEer(scores);
  r.n_bonafide = scores.Count(Label::kBonafide);
  r.n_spoof = scores.Count(Label::kSpoof);
  if (params) {
    r.min_tdcf = MinTdcf(scores, *params);
    r.params_hash = params->Hash();
  }
  return r;
}

}  // namespace subcm
