// tests/test_training.cpp

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
#include <limits>
#include <random>

#include <doctest.h>

#include "subcm/training.hpp"
#include "test_util.hpp"

using namespace subcm;

namespace {

// Random features; spoofs get a small offset in the top band.
FeatureSet Features(int n, std::uint64_t seed, double offset = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  FeatureSet set;
  for (int i = 0; i < n; ++i) {
    const Label label = i % 2 ? Label::kSpoof : Label::kBonafide;
    FeatureMatrix m(kNumFrames, kNumBins);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
    if (label == Label::kSpoof) m.rightCols(33).array() += float(offset);
    set.Add("u" + std::to_string(i), label, std::move(m));
  }
  return set;
}

const BandSelection kTop{SubbandPlan::Make(8), {7}};

TrainConfig Quick(int epochs) {
  TrainConfig c;
  c.batch_size = 8;
  c.learning_rate = 1e-3;
  c.max_epochs = epochs;
  c.patience = std::min(5, epochs - 1);
  c.seeds = {0};
  return c;
}

}  // namespace

TEST_CASE("patience trace") {
  EarlyStopping s(5, 1e-6);
  const std::vector<double> trace{0.6, 0.5, 0.51, 0.52, 0.53, 0.54, 0.55};
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK_FALSE(s.ShouldStop());
    s.Update(trace[i]);
  }
  CHECK(s.ShouldStop());
  CHECK(s.epochs_seen() == 7);
  CHECK(s.best_epoch() == 2);
  CHECK(s.best_loss() == 0.5);
}

TEST_CASE("stops exactly patience epochs after the best") {
  for (int patience : {1, 3, 5}) {
    for (int best : {1, 4, 9}) {
      EarlyStopping s(patience, 1e-6);
      int epoch = 0;
      while (!s.ShouldStop()) {
        ++epoch;
        s.Update(epoch <= best ? 1.0 - 0.1 * epoch : 1.0);
      }
      CHECK(s.best_epoch() == best);
      CHECK(epoch == best + patience);
    }
  }
}

TEST_CASE("improvements below the threshold do not reset patience") {
  EarlyStopping s(2, 1e-6);
  s.Update(0.5);
  CHECK_FALSE(s.Update(0.5 - 5e-7));
  CHECK_FALSE(s.Update(0.5 - 9e-7));
  CHECK(s.ShouldStop());
  EarlyStopping t(2, 1e-6);
  t.Update(0.5);
  CHECK(t.Update(0.5 - 1e-6));
}

TEST_CASE("select best by dev EER, then dev loss, then seed") {
  std::vector<RunSummary> runs;
  const std::vector<double> eer{12.0, 9.5, 11.1, 9.5, 14.2};
  const std::vector<double> loss{0.4, 0.35, 0.38, 0.33, 0.5};
  for (std::size_t i = 0; i < eer.size(); ++i) runs.push_back({i, eer[i], loss[i]});
  CHECK(SelectBestIndex(runs) == 3);

  const std::vector<RunSummary> single{{7, 50.0, 1.0}};
  CHECK(SelectBestIndex(single) == 0);

  std::vector<RunSummary> same;
  for (std::uint64_t s : {3, 1, 0, 2}) same.push_back({s, 5.0, 0.2});
  CHECK(same[SelectBestIndex(same)].seed == 0);

  // Order independence.
  std::vector<RunSummary> shuffled(runs.rbegin(), runs.rend());
  CHECK(shuffled[SelectBestIndex(shuffled)].seed == 3);
  CHECK_THROWS_AS(SelectBestIndex(std::vector<RunSummary>{}), ConfigError);
}

TEST_CASE("tiny set is memorized") {
  const FeatureSet train = Features(8, 1, 0.0);  // labels carry no signal
  SubCnnConfig arch = SubCnnConfig::Reduced(33);
  arch.dropout = 0.0;
  TrainConfig cfg = Quick(200);
  cfg.early_stopping = false;
  const TrainRun run = TrainModel(BuildSubCnn(arch, 1), kTop, train, train, cfg, 0);
  REQUIRE(run.epoch_log.size() == 200);
  CHECK(run.stop_reason == StopReason::kMaxEpochs);
  CHECK(run.epoch_log.back().train_loss < 0.01);
  CHECK(run.epoch_log.back().train_loss < run.epoch_log.front().train_loss);
}

TEST_CASE("training is deterministic") {
  const FeatureSet train = Features(16, 2), dev = Features(8, 3);
  const TrainConfig cfg = Quick(3);
  const SubCnnConfig arch = SubCnnConfig::Reduced(33);
  TrainRun a = TrainModel(BuildSubCnn(arch, 5), kTop, train, dev, cfg, 11);
  TrainRun b = TrainModel(BuildSubCnn(arch, 5), kTop, train, dev, cfg, 11);
  REQUIRE(a.epoch_log.size() == b.epoch_log.size());
  for (std::size_t i = 0; i < a.epoch_log.size(); ++i) {
    CHECK(a.epoch_log[i].train_loss == b.epoch_log[i].train_loss);
    CHECK(a.epoch_log[i].dev_loss == b.epoch_log[i].dev_loss);
    CHECK(a.epoch_log[i].dev_eer == b.epoch_log[i].dev_eer);
  }
  CHECK(ScoreFeatures(a.classifier(), kTop, dev) == ScoreFeatures(b.classifier(), kTop, dev));
  TrainRun c = TrainModel(BuildSubCnn(arch, 5), kTop, train, dev, cfg, 12);
  CHECK(c.epoch_log[0].train_loss != a.epoch_log[0].train_loss);

  // The kept model is the lowest-dev-loss epoch.
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : a.epoch_log) best = std::min(best, r.dev_loss);
  CHECK(a.best().dev_loss == best);
}

TEST_CASE("seed runs match single runs regardless of threads") {
  const FeatureSet train = Features(8, 2), dev = Features(8, 3);
  TrainConfig cfg = Quick(2);
  cfg.patience = 1;
  cfg.seeds = {4, 9};
  const SubCnnConfig arch = SubCnnConfig::Reduced(257);
  const SubbandPlan plan = SubbandPlan::Make(8);
  const auto serial = TrainSubCnnSeeds(arch, plan, 7, train, dev, cfg);
  cfg.threads = 2;
  const auto parallel = TrainSubCnnSeeds(arch, plan, 7, train, dev, cfg);
  REQUIRE(serial.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(serial[i].seed == cfg.seeds[i]);
    CHECK(serial[i].epoch_log.back().dev_loss == parallel[i].epoch_log.back().dev_loss);
  }
}

TEST_CASE("joint fine-tuning updates the transferred stages") {
  const FeatureSet train = Features(16, 2), dev = Features(8, 3);
  const SubbandPlan plan = SubbandPlan::Make(8);
  std::vector<SubCnn> subs{BuildSubCnn(SubCnnConfig::Reduced(32), 1),
                           BuildSubCnn(SubCnnConfig::Reduced(33), 2)};
  const std::vector<int> idx{0, 7};
  JointModel joint = BuildJoint(subs, idx, 8, true, 3);
  auto before = joint.State();
  std::vector<std::vector<float>> source;
  for (auto& s : subs)
    for (auto& e : s.State())
      if (e.name.rfind("embedding.", 0) == 0) source.push_back(e.tensor->data);
  std::size_t k = 0;
  for (auto& e : before)
    if (e.name.rfind("head.", 0) != 0) REQUIRE(e.tensor->data == source.at(k++));
  CHECK(k == source.size());

  TrainConfig cfg = Quick(2);
  cfg.patience = 1;
  TrainRun run = TrainModel(joint, {plan, idx}, train, dev, cfg, 0);
  auto after = std::get<JointModel>(run.best_model).State();
  bool changed = false;
  k = 0;
  for (auto& e : after)
    if (e.name.rfind("head.", 0) != 0 && e.tensor->data != source.at(k++)) changed = true;
  CHECK(changed);
  CHECK_THROWS_AS(TrainModel(joint, kTop, train, dev, cfg, 0), ConfigError);
}

TEST_CASE("non-finite loss aborts training") {
  FeatureSet train = Features(8, 4);
  train.features[3].rightCols(33).setConstant(std::numeric_limits<float>::quiet_NaN());
  const FeatureSet dev = Features(8, 5);
  CHECK_THROWS_AS(TrainModel(BuildSubCnn(SubCnnConfig::Reduced(33), 0), kTop, train, dev,
                             Quick(2), 0),
                  DivergenceError);
}

TEST_CASE("partition and config errors") {
  const FeatureSet good = Features(8, 4);
  FeatureSet empty;
  const auto model = BuildSubCnn(SubCnnConfig::Reduced(33), 0);
  CHECK_THROWS_WITH_AS(TrainModel(model, kTop, empty, good, Quick(2), 0),
                       doctest::Contains("empty train"), DataError);
  CHECK_THROWS_WITH_AS(TrainModel(model, kTop, good, empty, Quick(2), 0),
                       doctest::Contains("empty dev"), DataError);
  FeatureSet one_class;
  one_class.Add("a", Label::kBonafide, good.features[0]);
  CHECK_THROWS_AS(TrainModel(model, kTop, one_class, good, Quick(2), 0), DataError);
  TrainConfig bad = Quick(2);
  bad.patience = 2;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig::FromJson({{"batchsize", 8}}), ConfigError);
  const TrainConfig round = TrainConfig::FromJson(Quick(7).ToJson());
  CHECK(round.ToJson() == Quick(7).ToJson());
  CHECK(TrainConfig::FromJson(nlohmann::json::object()).batch_size == 32);
}

TEST_CASE("epoch log round trip") {
  testing::TempDir dir;
  const std::vector<EpochRecord> log{{1, 0.693147, 0.7, 50.0}, {2, 0.5, 0.45, 12.5}};
  WriteEpochLog(log, dir / "epoch_log.csv");
  CHECK(ReadFileBytes(dir / "epoch_log.csv").rfind("epoch,train_loss,dev_loss,dev_eer\n", 0) == 0);
  const auto back = ReadEpochLog(dir / "epoch_log.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].epoch == 2);
  CHECK(back[1].dev_eer == 12.5);
  CHECK(back[0].train_loss == doctest::Approx(0.693147));
  WriteFileBytes(dir / "bad.csv", "epoch,loss\n1,2\n");
  CHECK_THROWS_AS(ReadEpochLog(dir / "bad.csv"), DataError);
}

TEST_CASE("adam step") {
  nn::Parameter<float> p{"w", nn::Tensor<float>(1, 2), nn::Tensor<float>(1, 2)};
  p.value.data = {1.0f, -1.0f};
  p.grad.data = {0.5f, -2.0f};
  Adam adam({&p}, 0.1, 0.9, 0.999, 1e-8);
  adam.Step();
  // First bias-corrected step moves each coordinate by lr against its sign.
  CHECK(p.value.data[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p.value.data[1] == doctest::Approx(-0.9).epsilon(1e-6));
  CHECK(adam.steps() == 1);
}
