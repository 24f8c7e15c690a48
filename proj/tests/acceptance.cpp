// tests/acceptance.cpp

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

// Acceptance checks. Usage: acceptance [work_dir]
// Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "subcm/experiment.hpp"

namespace fs = std::filesystem;
using namespace subcm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::mt19937_64& Rng() {
  static std::mt19937_64 rng(20260101);
  return rng;
}

// ---------------------------------------------------------------------------

Outcome ShapeContract() {
  const auto start = Clock::now();
  std::uniform_int_distribution<int> len(400, 10 * kSampleRate);
  std::uniform_real_distribution<float> u(-0.9f, 0.9f);
  bool ok = true;
  for (int trial = 0; trial < 20 && ok; ++trial) {
    Waveform w;
    w.samples.resize(std::size_t(trial == 0 ? 400 : trial == 1 ? 48000 : len(Rng())));
    for (auto& v : w.samples) v = u(Rng());
    const Spectrogram s = ExtractFeatures(w, FrontendConfig{});
    ok = s.frames() == 300 && s.bins() == 257;
  }
  ok = ok && SubbandPlan::Make(2).widths() == std::vector<int>{128, 129} &&
       SubbandPlan::Make(4).widths() == std::vector<int>{64, 64, 64, 65} &&
       SubbandPlan::Make(8).widths() == std::vector<int>{32, 32, 32, 32, 32, 32, 32, 33};
  const double t = Seconds(start);
  return {ok && t < 1.0, fmt::format("20 inputs -> 300x257, plan widths exact, {:.2f} s", t)};
}

Outcome PartitionOracle() {
  const auto start = Clock::now();
  std::normal_distribution<float> g;
  bool ok = true;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    Spectrogram s;
    s.values.resize(kNumFrames, kNumBins);
    for (Eigen::Index k = 0; k < s.values.size(); ++k) s.values.data()[k] = g(Rng());
    for (int n : {1, 2, 4, 8}) {
      FeatureMatrix joined(kNumFrames, kNumBins);
      int col = 0;
      for (const auto& b : Split(s, SubbandPlan::Make(n))) {
        joined.middleCols(col, b.width()) = b.values;
        col += b.width();
      }
      ok = ok && col == kNumBins && joined == s.values;
    }
  }
  const double t = Seconds(start);
  return {ok && t < 1.0, fmt::format("100 matrices x 4 plans bit-exact, {:.2f} s", t)};
}

Outcome MetricOracles() {
  const auto start = Clock::now();
  std::uniform_int_distribution<int> size(1, 250);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  double worst = 0.0;
  auto make = [](const std::vector<double>& bona, const std::vector<double>& spoof) {
    TrialScores s;
    for (std::size_t i = 0; i < bona.size(); ++i)
      s.entries.push_back({"b" + std::to_string(i), bona[i], Label::kBonafide});
    for (std::size_t i = 0; i < spoof.size(); ++i)
      s.entries.push_back({"s" + std::to_string(i), spoof[i], Label::kSpoof});
    return s;
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> bona, spoof;
    const bool ties = trial % 2 == 0;
    const double shift = 3 * u(Rng());
    auto draw = [&](double mean) {
      const double v = mean + g(Rng());
      return ties ? std::round(v * 4) / 4 : v;
    };
    for (int i = size(Rng()); i > 0; --i) bona.push_back(draw(shift));
    for (int i = size(Rng()); i > 0; --i) spoof.push_back(draw(0));
    TdcfParams p;
    p.asv = {0.2 * u(Rng()), 0.2 * u(Rng()), u(Rng())};
    const TrialScores s = make(bona, spoof);
    worst = std::max(worst, std::abs(ComputeEer(s) - oracle::Eer(bona, spoof)));
    const auto c = oracle::Coefficients(p.asv.p_miss, p.asv.p_fa, p.asv.p_miss_spoof);
    worst = std::max(worst, std::abs(MinTdcf(s, p) - oracle::MinTdcf(bona, spoof, c)));
  }
  const TrialScores flat = make(std::vector<double>(50, 0.7), std::vector<double>(30, 0.7));
  const TrialScores sep = make({0.9, 0.8, 0.75}, {0.1, 0.2, 0.3});
  TdcfParams p;
  p.asv = {0.05, 0.02, 0.6};
  const bool anchors = ComputeEer(flat) == 0.5 && MinTdcf(flat, p) == 1.0 &&
                       ComputeEer(sep) == 0.0 && MinTdcf(sep, p) == 0.0;
  const double t = Seconds(start);
  return {worst <= 1e-9 && anchors && t < 10.0,
          fmt::format("max |diff| {:.2e} over 100 instances, chance/separable anchors {}, {:.2f} s",
                      worst, anchors ? "exact" : "WRONG", t)};
}

Outcome GradientCheck() {
  const auto start = Clock::now();
  SubCnnConfig cfg = SubCnnConfig::Reduced(32);
  SubCnnT<double> model(cfg, 7);
  // BN running statistics are irrelevant in training mode; dropout masks are
  // made repeatable by reseeding before every forward pass.
  nn::Tensor<double> x(3, 1, kNumFrames, 32);
  std::normal_distribution<double> g;
  for (auto& v : x.data) v = g(Rng());
  const std::vector<nn::Tensor<double>> inputs{x};
  const std::vector<float> y{1, 0, 1};
  auto loss = [&](bool backward) {
    std::mt19937_64 drop(99);
    const nn::Context ctx{nn::Mode::kTrain, &drop};
    const auto logits = model.Forward(inputs, ctx);
    nn::Tensor<double> grad;
    const double l = nn::BceWithLogits(logits, y, backward ? &grad : nullptr);
    if (backward) {
      model.ZeroGrad();
      model.Backward(grad);
    }
    return l;
  };
  loss(true);
  double worst = 0.0;
  std::string worst_name;
  const double h = 1e-6;
  for (auto* p : model.Parameters()) {
    const std::size_t stride = std::max<std::size_t>(1, p->value.size() / 6);
    std::vector<double> analytic, numeric;
    for (std::size_t k = 0; k < p->value.size(); k += stride) {
      const double saved = p->value.data[k];
      p->value.data[k] = saved + h;
      const double up = loss(false);
      p->value.data[k] = saved - h;
      const double down = loss(false);
      p->value.data[k] = saved;
      analytic.push_back(p->grad.data[k]);
      numeric.push_back((up - down) / (2 * h));
    }
    const Eigen::Map<Eigen::VectorXd> a(analytic.data(), Eigen::Index(analytic.size()));
    const Eigen::Map<Eigen::VectorXd> n(numeric.data(), Eigen::Index(numeric.size()));
    const double scale = std::max({a.norm(), n.norm(), 1e-12});
    const double rel = (a - n).norm() / scale;
    if (rel > worst) {
      worst = rel;
      worst_name = p->name;
    }
  }
  const double t = Seconds(start);
  return {worst <= 1e-3 && t < 60.0,
          fmt::format("{} parameter groups, max relative error {:.2e} ({}), {:.1f} s",
                      model.Parameters().size(), worst, worst_name, t)};
}

Outcome TransferContract() {
  const SubbandPlan plan = SubbandPlan::Make(8);
  std::vector<SubCnn> subs;
  for (int b = 0; b < 8; ++b) subs.push_back(BuildSubCnn(SubCnnConfig::Reduced(plan.width(b)), b));
  // Non-trivial running statistics, as after pretraining.
  for (auto& s : subs)
    for (auto* buf : s.Buffers())
      for (auto& v : buf->value.data) v += 0.3f;
  const std::vector<int> all{0, 1, 2, 3, 4, 5, 6, 7};
  JointModel joint = BuildJoint(subs, all, 8, true, 1);

  std::vector<std::vector<float>> source;
  for (auto& s : subs)
    for (auto& e : s.State())
      if (e.name.rfind("embedding.", 0) == 0) source.push_back(e.tensor->data);
  std::vector<nn::Tensor<float>*> stages;
  for (auto& e : joint.State())
    if (e.name.rfind("head.", 0) != 0) stages.push_back(e.tensor);
  bool equal = stages.size() == source.size();
  for (std::size_t i = 0; equal && i < stages.size(); ++i) equal = stages[i]->data == source[i];

  std::normal_distribution<float> g;
  std::vector<nn::Tensor<float>> inputs;
  for (int b = 0; b < 8; ++b) {
    nn::Tensor<float> t(4, 1, kNumFrames, plan.width(b));
    for (auto& v : t.data) v = g(Rng());
    inputs.push_back(std::move(t));
  }
  std::mt19937_64 drop(3);
  const nn::Context ctx{nn::Mode::kTrain, &drop};
  Adam adam(joint.Parameters(), 1e-3, 0.9, 0.999, 1e-8);
  joint.ZeroGrad();
  nn::Tensor<float> grad;
  nn::BceWithLogits(joint.Forward(inputs, ctx), std::vector<float>{1, 0, 1, 0}, &grad);
  joint.Backward(grad);
  adam.Step();
  std::size_t changed = 0;
  for (std::size_t i = 0; i < stages.size(); ++i) changed += stages[i]->data != source[i];
  return {equal && changed > 0,
          fmt::format("{} stage tensors copied exactly: {}; after one step {} differ", stages.size(),
                      equal ? "yes" : "NO", changed)};
}

// ---------------------------------------------------------------------------

struct PipelineResult {
  fs::path out;
  std::map<std::string, double> eer;  // model id -> eval EER (%)
  std::string table;
  double seconds = 0.0;
};

ExperimentConfig DeskConfig(const fs::path& corpus, const fs::path& out, const std::string& name) {
  ExperimentConfig c;
  c.experiment = name;
  c.corpus = corpus;
  c.out = out;
  c.n_splits = 8;
  c.architecture = "reduced";
  c.training.batch_size = 8;
  c.training.learning_rate = 1e-3;
  c.training.max_epochs = 100;
  c.training.patience = 5;
  c.training.seeds = {0, 1};
  c.threads = int(std::max(1u, std::thread::hardware_concurrency()));
  c.training.threads = c.threads;
  return c;
}

PipelineResult RunPipeline(const fs::path& root) {
  const auto start = Clock::now();
  PipelineResult r;
  r.out = root / "runs";
  GenerateSynthetic(SynthSpec{}, root / "synthetic");
  const fs::path corpus = root / "synthetic" / kCorpusManifestName;

  const ExperimentConfig bank = DeskConfig(corpus, r.out, "m-bank-8");
  Experiment(bank).Pretrain();
  ExperimentConfig j3 = DeskConfig(corpus, r.out, "j3");
  j3.pretrained = bank.dir();
  Experiment(j3).Joint();
  ExperimentConfig j4 = j3;
  j4.experiment = "j4";
  j4.bands = {0, 7};
  Experiment(j4).Joint();

  std::vector<std::string> subs;
  for (int b = 0; b < 8; ++b) subs.push_back(SubModelId(8, b));
  ExperimentConfig ls = DeskConfig(corpus, r.out, "fusion");
  ls.fusion = FusionConfig{FusionMode::kLs, subs, bank.dir().string(), "f5", {}};
  Experiment(ls).Fuse();
  ExperimentConfig wls = ls;
  wls.fusion->mode = FusionMode::kWls;
  wls.fusion->id = "f6";
  Experiment(wls).Fuse();

  const auto rows = CollectResults({r.out});
  for (const auto& row : rows) r.eer[row.model_id] = row.metrics.eer_percent;
  r.table = RenderMarkdown(rows);
  r.seconds = Seconds(start);
  return r;
}

Outcome PipelineTrend(const PipelineResult& r) {
  auto get = [&](const std::string& id) {
    auto it = r.eer.find(id);
    return it == r.eer.end() ? std::nan("") : it->second;
  };
  double best_sub = 100.0;
  std::string all;
  for (int b = 0; b < 8; ++b) {
    const std::string id = SubModelId(8, b);
    best_sub = std::min(best_sub, get(id));
    all += fmt::format("{}={:.1f} ", id, get(id));
  }
  const bool ok = get("m14") <= 10.0 && get("m9") >= 40.0 && get("j3") <= best_sub + 2.0 &&
                  get("j4") <= 15.0;
  return {ok, fmt::format("eval EER % {}| j3={:.1f} j4={:.1f}; {:.0f} s with {} thread(s)", all,
                          get("j3"), get("j4"), r.seconds,
                          std::max(1u, std::thread::hardware_concurrency()))};
}

Outcome FusionIdentities(const PipelineResult& r) {
  const fs::path bank = r.out / "m-bank-8";
  std::vector<TrialScores> eval;
  for (int b = 0; b < 8; ++b) {
    const fs::path dir = bank / SubModelId(8, b) / "scores";
    const auto labels = ReadLabelFile(dir / "synthetic_eval.labels");
    eval.push_back(ReadScoreFile(dir / "synthetic_eval.scores", &labels));
  }
  const TrialScores ls = FuseLinear(eval);
  const TrialScores unit = FuseWeighted(eval, {std::vector<double>(8, 1.0), 0.0});
  bool identical = ls.entries.size() == unit.entries.size();
  for (std::size_t i = 0; identical && i < ls.entries.size(); ++i)
    identical = ls.entries[i].utterance_id == unit.entries[i].utterance_id &&
                ls.entries[i].score == unit.entries[i].score;
  identical = identical && ComputeEer(ls) == ComputeEer(unit);
  const double f5 = r.eer.at("f5"), f6 = r.eer.at("f6");
  return {identical && f6 <= f5 + 1.0,
          fmt::format("unit-weight WLS == LS score-for-score: {}; eval EER LS {:.2f}%, WLS {:.2f}%",
                      identical ? "yes" : "NO", f5, f6)};
}

Outcome Determinism(const PipelineResult& a, const PipelineResult& b) {
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.out)) {
    const auto ext = e.path().extension();
    if (!e.is_regular_file() || (ext != ".scores" && ext != ".labels")) continue;
    ++files;
    const fs::path other = b.out / fs::relative(e.path(), a.out);
    if (!fs::exists(other) || ReadFileBytes(e.path()) != ReadFileBytes(other)) ++differing;
  }
  const bool same_table = a.table == b.table;
  return {files > 0 && differing == 0 && same_table,
          fmt::format("{} score/label files compared, {} differ; tables {}", files, differing,
                      same_table ? "identical" : "DIFFER")};
}

Outcome EarlyStoppingAndSelection() {
  bool ok = true;
  std::string detail;
  EarlyStopping trace(5, 1e-6);
  int epochs = 0;
  for (double l : {0.6, 0.5, 0.51, 0.52, 0.53, 0.54, 0.55, 0.56}) {
    if (trace.ShouldStop()) break;
    trace.Update(l);
    ++epochs;
  }
  ok = ok && trace.ShouldStop() && epochs == 7 && trace.best_epoch() == 2;
  for (int patience = 1; patience <= 6; ++patience) {
    for (int best = 1; best <= 10; ++best) {
      EarlyStopping s(patience, 1e-6);
      int e = 0;
      while (!s.ShouldStop() && e < 100) {
        ++e;
        // Decreasing to the best epoch, then rises and dips below the 1e-6 threshold.
        const double after = (e - best) % 2 ? 1.0 / best - 4e-7 : 1.0 / best + 1e-3;
        s.Update(e <= best ? 1.0 / e : after);
      }
      ok = ok && s.best_epoch() == best && e == best + patience;
    }
  }
  const std::vector<RunSummary> runs{{0, 12.0, .4}, {1, 9.5, .35}, {2, 11.1, .38},
                                     {3, 9.5, .33}, {4, 14.2, .5}};
  const std::vector<RunSummary> one{{4, 3.0, 1.0}};
  const std::vector<RunSummary> same{{2, 5, .1}, {0, 5, .1}, {1, 5, .1}};
  ok = ok && SelectBestIndex(runs) == 3 && SelectBestIndex(one) == 0 &&
       same[SelectBestIndex(same)].seed == 0;
  return {ok, "patience traces stop exactly patience epochs after the best; tie chain EER > loss > seed"};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "subcm_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "shape contract", ShapeContract);
  report(2, "partition oracle", PartitionOracle);
  report(3, "metric oracles", MetricOracles);
  report(4, "gradient check", GradientCheck);
  report(5, "transfer contract", TransferContract);

  std::optional<PipelineResult> first, second;
  std::string pipeline_error;
  try {
    first = RunPipeline(work / "run1");
  } catch (const std::exception& e) {
    pipeline_error = e.what();
  }
  report(6, "two-stage pipeline", [&]() -> Outcome {
    if (!first) return {false, "pipeline failed: " + pipeline_error};
    return PipelineTrend(*first);
  });
  report(7, "fusion identities", [&]() -> Outcome {
    if (!first) return {false, "pipeline failed: " + pipeline_error};
    return FusionIdentities(*first);
  });
  report(8, "determinism", [&]() -> Outcome {
    if (!first) return {false, "pipeline failed: " + pipeline_error};
    second = RunPipeline(work / "run2");
    return Determinism(*first, *second);
  });
  report(9, "early stopping", EarlyStoppingAndSelection);

  if (first) {
    WriteFileBytes(work / "results.md", first->table);
    std::printf("\n%s", first->table.c_str());
  }
  std::printf("\n%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
