// tests/test_metrics.cpp

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

#include <cmath>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "subcm/hash.hpp"
#include "subcm/metrics.hpp"
#include "test_util.hpp"

using namespace subcm;

namespace {

TrialScores Make(const std::vector<double>& bona, const std::vector<double>& spoof) {
  TrialScores s;
  s.source = "test";
  for (std::size_t i = 0; i < bona.size(); ++i)
    s.entries.push_back({"b" + std::to_string(i), bona[i], Label::kBonafide});
  for (std::size_t i = 0; i < spoof.size(); ++i)
    s.entries.push_back({"s" + std::to_string(i), spoof[i], Label::kSpoof});
  return s;
}

struct Instance {
  std::vector<double> bona, spoof;
  TdcfParams params;
};

Instance RandomInstance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 250);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  Instance inst;
  const int nb = size(rng), ns = size(rng);
  const double shift = 3 * u(rng);
  const bool quantize = u(rng) < 0.5;  // exercise ties
  auto draw = [&](double mean) {
    const double v = mean + g(rng);
    return quantize ? std::round(v * 4) / 4 : v;
  };
  for (int i = 0; i < nb; ++i) inst.bona.push_back(draw(shift));
  for (int i = 0; i < ns; ++i) inst.spoof.push_back(draw(0.0));
  inst.params.asv = {0.2 * u(rng), 0.2 * u(rng), u(rng)};
  return inst;
}

}  // namespace

TEST_CASE("eer and min t-DCF match the brute-force sweep") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = RandomInstance(rng);
    const TrialScores s = Make(inst.bona, inst.spoof);
    const double eer = ComputeEer(s);
    REQUIRE(std::abs(eer - oracle::Eer(inst.bona, inst.spoof)) <= 1e-9);
    const auto c = oracle::Coefficients(inst.params.asv.p_miss, inst.params.asv.p_fa,
                                        inst.params.asv.p_miss_spoof);
    REQUIRE(std::abs(MinTdcf(s, inst.params) - oracle::MinTdcf(inst.bona, inst.spoof, c)) <=
            1e-9);
  }
}

TEST_CASE("error curve layout") {
  const ErrorCurve c = ComputeErrorCurve(std::vector<double>{0.9, 0.8, 0.8},
                                         std::vector<double>{0.1, 0.8});
  // Distinct scores 0.1, 0.8, 0.9: the two sentinels plus all but the lowest.
  CHECK(c.size() == 4);
  CHECK(std::isinf(c.thresholds.front()));
  CHECK(c.thresholds.front() < 0);
  CHECK(std::isinf(c.thresholds.back()));
  CHECK(c.far.front() == 1.0);
  CHECK(c.frr.front() == 0.0);
  CHECK(c.far.back() == 0.0);
  CHECK(c.frr.back() == 1.0);
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c.far[i] <= c.far[i - 1]);
    CHECK(c.frr[i] >= c.frr[i - 1]);
  }
  // A trial scoring exactly at the threshold is accepted.
  CHECK(c.thresholds[1] == 0.8);
  CHECK(c.far[1] == 0.5);
  CHECK(c.frr[1] == 0.0);
}

TEST_CASE("constant scores sit at chance level") {
  const TrialScores s = Make(std::vector<double>(37, 0.3), std::vector<double>(11, 0.3));
  CHECK(ComputeEer(s) == 0.5);
  TdcfParams p;
  p.asv = {0.05, 0.1, 0.4};
  CHECK(MinTdcf(s, p) == 1.0);
  CHECK(MinTdcf(s, TdcfParams{}) == 1.0);
}

TEST_CASE("separable scores give zero") {
  const TrialScores s = Make({0.7, 0.8, 0.9}, {0.1, 0.2, 0.69});
  CHECK(ComputeEer(s) == 0.0);
  CHECK(MinTdcf(s, TdcfParams{}) == 0.0);
  const TrialScores reversed = Make({0.1, 0.2}, {0.7, 0.8});
  CHECK(ComputeEer(reversed) == 1.0);
}

TEST_CASE("eer invariances") {
  std::mt19937_64 rng(5);
  const Instance inst = RandomInstance(rng);
  const double eer = ComputeEer(inst.bona, inst.spoof);
  auto map = [](std::vector<double> v, auto f) {
    for (auto& x : v) x = f(x);
    return v;
  };
  auto monotone = [](double x) { return std::exp(0.5 * x) + 3.0; };
  CHECK(ComputeEer(map(inst.bona, monotone), map(inst.spoof, monotone)) ==
        doctest::Approx(eer).epsilon(1e-12));
  auto rev_b = inst.bona, rev_s = inst.spoof;
  std::reverse(rev_b.begin(), rev_b.end());
  std::reverse(rev_s.begin(), rev_s.end());
  CHECK(ComputeEer(rev_b, rev_s) == eer);
  // Swapping classes and negating scores mirrors the curve.
  auto neg = [](double x) { return -x; };
  CHECK(ComputeEer(map(inst.spoof, neg), map(inst.bona, neg)) ==
        doctest::Approx(eer).epsilon(1e-12));
  CHECK_THROWS_AS(ComputeEer(inst.bona, std::vector<double>{}), DataError);
}

TEST_CASE("normalized t-DCF at a threshold and degenerate operating points") {
  const TrialScores s = Make({0.2, 0.6, 0.9}, {0.1, 0.5, 0.7});
  TdcfParams p;
  p.asv = {0.1, 0.05, 0.3};
  const auto c = oracle::Coefficients(0.1, 0.05, 0.3);
  CHECK(p.C1() == doctest::Approx(c.c1));
  CHECK(p.C2() == doctest::Approx(c.c2));
  const double at = NormalizedTdcfAt(s, p, 0.55);
  CHECK(at == doctest::Approx((c.c1 / 3 + c.c2 / 3) / std::min(c.c1, c.c2)));
  CHECK(MinTdcf(s, p) <= at);
  TdcfParams spoof_always_rejected;
  spoof_always_rejected.asv = {0.0, 0.0, 1.0};
  CHECK_THROWS_WITH_AS(MinTdcf(s, spoof_always_rejected), doctest::Contains("degenerate"),
                       DataError);
  TdcfParams bad_priors;
  bad_priors.prior_spoof = 0.5;
  CHECK_THROWS_AS(bad_priors.Validate(), ConfigError);
  CHECK_THROWS_AS(TdcfParams::FromJson({{"cost_fa_cm", -1.0}}), ConfigError);
  const TdcfParams round = TdcfParams::FromJson(p.ToJson());
  CHECK(round.asv == p.asv);
  CHECK(round.Hash() == p.Hash());
}

TEST_CASE("ASV operating point") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    AsvScoreSet set;
    std::vector<double> tar, non, spf;
    for (int i = 0; i < 60; ++i) tar.push_back(std::round((2 + g(rng)) * 4) / 4);
    for (int i = 0; i < 45; ++i) non.push_back(std::round((-2 + g(rng)) * 4) / 4);
    for (int i = 0; i < 30; ++i) spf.push_back(1 + 1.5 * g(rng));
    for (double s : tar) set.trials.push_back({"t", AsvTrialType::kTarget, s});
    for (double s : non) set.trials.push_back({"n", AsvTrialType::kNontarget, s});
    for (double s : spf) set.trials.push_back({"s", AsvTrialType::kSpoof, s});
    const AsvRates r = AsvOperatingRates(set);
    const auto ref = oracle::AsvAtEer(tar, non, spf);
    CHECK(r.p_miss == ref.p_miss);
    CHECK(r.p_fa == ref.p_fa);
    CHECK(r.p_miss_spoof == ref.p_miss_spoof);
  }
  AsvScoreSet missing;
  missing.trials.push_back({"t", AsvTrialType::kTarget, 1.0});
  CHECK_THROWS_AS(AsvOperatingRates(missing), DataError);
}

TEST_CASE("ASV score file round trip and errors") {
  testing::TempDir dir;
  AsvScoreSet set;
  set.trials = {{"a", AsvTrialType::kTarget, 1.5},
                {"b", AsvTrialType::kNontarget, -2.25},
                {"c", AsvTrialType::kSpoof, 0.125}};
  WriteAsvScoreFile(set, dir / "asv.txt");
  CHECK(ReadFileBytes(dir / "asv.txt") ==
        "a target 1.500000\nb nontarget -2.250000\nc spoof 0.125000\n");
  const AsvScoreSet back = ReadAsvScoreFile(dir / "asv.txt");
  REQUIRE(back.trials.size() == 3);
  CHECK(back.trials[1].type == AsvTrialType::kNontarget);
  CHECK(back.trials[1].score == -2.25);
  WriteFileBytes(dir / "bad.txt", "a impostor 1.0\n");
  CHECK_THROWS_AS(ReadAsvScoreFile(dir / "bad.txt"), DataError);
  WriteFileBytes(dir / "bad2.txt", "a target x1\n");
  CHECK_THROWS_WITH_AS(ReadAsvScoreFile(dir / "bad2.txt"), doctest::Contains(":1:"), DataError);
}

TEST_CASE("score and label files") {
  testing::TempDir dir;
  const TrialScores s = Make({0.25, 0.123456789}, {-1.0});
  WriteScoreFile(s, dir / "x.scores");
  WriteLabelFile(s, dir / "x.labels");
  CHECK(ReadFileBytes(dir / "x.scores") == "b0 0.250000\nb1 0.123457\ns0 -1.000000\n");
  CHECK(ReadFileBytes(dir / "x.labels") == "b0 bonafide\nb1 bonafide\ns0 spoof\n");
  const auto labels = ReadLabelFile(dir / "x.labels");
  const TrialScores back = ReadScoreFile(dir / "x.scores", &labels);
  CHECK(back.source == "x");
  REQUIRE(back.entries.size() == 3);
  CHECK(back.entries[1].score == 0.123457);
  CHECK(back.entries[2].label == Label::kSpoof);
  CHECK(RoundToFilePrecision(s).entries[1].score == back.entries[1].score);

  WriteFileBytes(dir / "dup.scores", "a 0.1\na 0.2\n");
  CHECK_THROWS_WITH_AS(ReadScoreFile(dir / "dup.scores"), doctest::Contains("duplicate"),
                       DataError);
  WriteFileBytes(dir / "nan.scores", "a nan\n");
  CHECK_THROWS_AS(ReadScoreFile(dir / "nan.scores"), DataError);
  WriteFileBytes(dir / "fields.scores", "a 0.1 extra\n");
  CHECK_THROWS_AS(ReadScoreFile(dir / "fields.scores"), DataError);
  WriteFileBytes(dir / "nolabel.scores", "zz 0.1\n");
  CHECK_THROWS_AS(ReadScoreFile(dir / "nolabel.scores", &labels), DataError);
}

TEST_CASE("metrics report") {
  const TrialScores s = Make({0.7, 0.8, 0.3}, {0.1, 0.5});
  const MetricsReport r = Evaluate(s, TdcfParams{});
  CHECK(r.n_bonafide == 3);
  CHECK(r.n_spoof == 2);
  CHECK(r.eer_percent == doctest::Approx(100 * oracle::Eer({0.7, 0.8, 0.3}, {0.1, 0.5})));
  REQUIRE(r.min_tdcf.has_value());
  const MetricsReport back = MetricsReport::FromJson(r.ToJson());
  CHECK(back.eer_percent == r.eer_percent);
  CHECK(back.min_tdcf == r.min_tdcf);
  CHECK_FALSE(Evaluate(s, std::nullopt).min_tdcf.has_value());
}
