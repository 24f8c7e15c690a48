// subcm/experiment.cpp

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

#include "subcm/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "subcm/checkpoint.hpp"
#include "subcm/hash.hpp"

namespace subcm {
namespace fs = std::filesystem;

std::string FusionModeName(FusionMode m) { return m == FusionMode::kLs ? "ls" : "wls"; }

FusionMode ParseFusionMode(const std::string& name) {
  if (name == "ls") return FusionMode::kLs;
  if (name == "wls") return FusionMode::kWls;
  throw ConfigError("unknown fusion mode '" + name + "' (expected ls or wls)");
}

std::string FusionConfig::ModelId() const {
  if (!id.empty()) return id;
  std::string s = "f-" + FusionModeName(mode);
  for (const auto& sys : systems) s += "-" + sys;
  return s;
}

namespace {

template <typename T>
T Get(const nlohmann::json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

FusionConfig FusionFromJson(const nlohmann::json& j) {
  FusionConfig f;
  if (!j.is_object()) throw ConfigError("fusion must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "mode") f.mode = ParseFusionMode(Get<std::string>(v, "mode"));
    else if (key == "systems") f.systems = Get<std::vector<std::string>>(v, "systems");
    else if (key == "source") f.source = Get<std::string>(v, "source");
    else if (key == "id") f.id = Get<std::string>(v, "id");
    else if (key == "l2") f.fit.l2 = Get<double>(v, "l2");
    else if (key == "max_iterations") f.fit.max_iterations = Get<int>(v, "max_iterations");
    else throw ConfigError("unknown fusion key '" + key + "'");
  }
  if (f.systems.empty()) throw ConfigError("fusion needs at least one system");
  return f;
}

nlohmann::json FusionToJson(const FusionConfig& f) {
  nlohmann::json j = {{"mode", FusionModeName(f.mode)},
                      {"systems", f.systems},
                      {"l2", f.fit.l2},
                      {"max_iterations", f.fit.max_iterations}};
  if (!f.source.empty()) j["source"] = f.source;
  if (!f.id.empty()) j["id"] = f.id;
  return j;
}

nlohmann::json ReadJson(const fs::path& path) {
  try {
    return nlohmann::json::parse(ReadFileBytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

void WriteJson(const fs::path& path, const nlohmann::json& j) {
  WriteFileBytes(path, j.dump(2) + "\n");
}

std::string ScoreStem(const std::string& corpus, Partition p) {
  return corpus + "_" + PartitionName(p);
}

TrialScores MakeScores(const std::string& source, const FeatureSet& set,
                       const std::vector<double>& scores) {
  TrialScores t;
  t.source = source;
  for (std::size_t i = 0; i < set.size(); ++i)
    t.entries.push_back({set.ids[i], scores[i], set.labels[i]});
  return RoundToFilePrecision(std::move(t));
}

void WriteScores(const TrialScores& scores, const fs::path& dir, const std::string& stem) {
  WriteScoreFile(scores, dir / (stem + ".scores"));
  WriteLabelFile(scores, dir / (stem + ".labels"));
}

TrialScores ReadScores(const fs::path& dir, const std::string& stem,
                       const std::string& source) {
  const fs::path score_path = dir / (stem + ".scores");
  const fs::path label_path = dir / (stem + ".labels");
  if (!fs::exists(score_path)) throw DataError("missing score file " + score_path.string());
  const auto labels = ReadLabelFile(label_path);
  TrialScores s = ReadScoreFile(score_path, &labels);
  s.source = source;
  return s;
}

BandSelection SelectionOf(const CheckpointManifest& m) {
  return {SubbandPlan::Make(m.plan_n), m.band_indices};
}

}  // namespace

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("experiment config must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "experiment") c.experiment = Get<std::string>(v, "experiment");
    else if (key == "corpus") c.corpus = Get<std::string>(v, "corpus");
    else if (key == "eval_corpora") {
      for (const auto& p : Get<std::vector<std::string>>(v, "eval_corpora"))
        c.eval_corpora.emplace_back(p);
    } else if (key == "n_splits") c.n_splits = Get<int>(v, "n_splits");
    else if (key == "bands") c.bands = Get<std::vector<int>>(v, "bands");
    else if (key == "architecture") c.architecture = Get<std::string>(v, "architecture");
    else if (key == "training") c.training = TrainConfig::FromJson(v);
    else if (key == "joint_training") c.joint_training = TrainConfig::FromJson(v);
    else if (key == "pretrained") c.pretrained = Get<std::string>(v, "pretrained");
    else if (key == "tdcf") c.tdcf = v;
    else if (key == "asv_scores") c.asv_scores = Get<std::string>(v, "asv_scores");
    else if (key == "fusion") c.fusion = FusionFromJson(v);
    else if (key == "synth") c.synth = SynthSpec::FromJson(v);
    else if (key == "out") c.out = Get<std::string>(v, "out");
    else if (key == "threads") c.threads = Get<int>(v, "threads");
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return FromJson(ReadJson(path));
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j = {{"experiment", experiment},
                      {"corpus", corpus.string()},
                      {"n_splits", n_splits},
                      {"architecture", architecture},
                      {"training", training.ToJson()},
                      {"out", out.string()},
                      {"threads", threads}};
  if (!eval_corpora.empty()) {
    j["eval_corpora"] = nlohmann::json::array();
    for (const auto& p : eval_corpora) j["eval_corpora"].push_back(p.string());
  }
  if (!bands.empty()) j["bands"] = bands;
  if (joint_training) j["joint_training"] = joint_training->ToJson();
  if (!pretrained.empty()) j["pretrained"] = pretrained.string();
  if (tdcf) j["tdcf"] = *tdcf;
  if (!asv_scores.empty()) j["asv_scores"] = asv_scores.string();
  if (fusion) j["fusion"] = FusionToJson(*fusion);
  if (synth) j["synth"] = synth->ToJson();
  return j;
}

void ExperimentConfig::Validate() const {
  if (experiment.empty() || experiment.find('/') != std::string::npos)
    throw ConfigError("experiment name must be a non-empty path component");
  const SubbandPlan plan = SubbandPlan::Make(n_splits);
  if (!bands.empty()) NormalizeBandSubset(plan, bands);
  if (architecture != "reduced" && architecture != "full")
    throw ConfigError("architecture must be 'reduced' or 'full'");
  training.Validate();
  if (joint_training) joint_training->Validate();
  if (threads <= 0) throw ConfigError("threads must be positive");
  if (tdcf) TdcfParams::FromJson(*tdcf);
}

SubCnnConfig ExperimentConfig::Architecture(int input_bins) const {
  return architecture == "full" ? SubCnnConfig::Full(input_bins)
                                 : SubCnnConfig::Reduced(input_bins);
}

const TrainConfig& ExperimentConfig::JointTraining() const {
  return joint_training ? *joint_training : training;
}

std::string SubModelId(int n, int band) {
  const SubbandPlan plan = SubbandPlan::Make(n);
  if (band < 0 || band >= n) throw ConfigError("band out of range");
  if (n == 1) return "cnn";
  const int first = n == 2 ? 1 : n == 4 ? 3 : 7;
  return "m" + std::to_string(first + band);
}

std::pair<int, int> ParseSubModelId(const std::string& id) {
  if (id == "cnn") return {1, 0};
  if (id.size() >= 2 && id[0] == 'm' &&
      std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(c); })) {
    const int k = std::stoi(id.substr(1));
    if (k >= 1 && k <= 2) return {2, k - 1};
    if (k >= 3 && k <= 6) return {4, k - 3};
    if (k >= 7 && k <= 14) return {8, k - 7};
  }
  throw ConfigError("unknown sub-CNN id '" + id + "'");
}

std::string JointModelId(int n, const std::vector<int>& bands) {
  if (n < 2) throw ConfigError("a joint model needs n_splits >= 2");
  const bool all = bands.empty() || int(bands.size()) == n;
  if (all) return n == 2 ? "j1" : n == 4 ? "j2" : "j3";
  if (n == 8 && bands == std::vector<int>{0, 7}) return "j4";
  std::string id = "j" + std::to_string(n) + "-b";
  for (std::size_t i = 0; i < bands.size(); ++i)
    id += (i ? "-" : "") + std::to_string(bands[i]);
  return id;
}

std::string BandsLabel(int n, const std::vector<int>& bands) {
  if (bands.empty() || int(bands.size()) == n) return "0-8";
  const SubbandPlan plan = SubbandPlan::Make(n);
  std::string s;
  for (std::size_t i = 0; i < bands.size(); ++i)
    s += (i ? "," : "") + plan.BandLabel(bands[i]);
  return s;
}

nlohmann::json ResultRow::ToJson() const {
  return {{"model_id", model_id},   {"subband", subband},
          {"corpus", corpus},       {"partition", partition},
          {"metrics", metrics.ToJson()}, {"score_file", score_file}};
}

ResultRow ResultRow::FromJson(const nlohmann::json& j) {
  try {
    ResultRow r;
    r.model_id = j.at("model_id");
    r.subband = j.at("subband");
    r.corpus = j.at("corpus");
    r.partition = j.value("partition", std::string("eval"));
    r.metrics = MetricsReport::FromJson(j.at("metrics"));
    r.score_file = j.value("score_file", std::string());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad result row: ") + e.what());
  }
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.Validate();
}

CorpusFeatures& Experiment::Features(const fs::path& manifest_path, bool need_training) {
  const std::string key = fs::weakly_canonical(manifest_path).string();
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    if (!fs::exists(manifest_path))
      throw ConfigError("corpus manifest not found: " + manifest_path.string());
    it = cache_.emplace(key, CorpusFeatures{CorpusManifest::Load(manifest_path), {}, {}, {}})
             .first;
  }
  CorpusFeatures& c = it->second;
  auto load = [&](std::optional<FeatureSet>& slot, Partition p) {
    if (slot) return;
    FeaturePartition fp = LoadFeatures(c.manifest, p, config_.threads);
    if (!fp.rejects.empty()) {
      WriteRejects(fp.rejects, config_.dir() / "rejects" /
                                   (c.manifest.name + "_" + PartitionName(p) + ".tsv"));
      spdlog::warn("{} {}: {} utterances rejected", c.manifest.name, PartitionName(p),
                   fp.rejects.size());
    }
    if (fp.features.size() == 0)
      throw DataError("no usable utterances in " + c.manifest.name + " " + PartitionName(p));
    spdlog::info("loaded {} {} ({} utterances)", c.manifest.name, PartitionName(p),
                 fp.features.size());
    slot = std::move(fp.features);
  };
  if (need_training) {
    load(c.train, Partition::kTrain);
    load(c.dev, Partition::kDev);
  }
  if (c.manifest.has_partition(Partition::kEval)) load(c.eval, Partition::kEval);
  return c;
}

std::optional<TdcfParams> Experiment::TdcfFor(const CorpusManifest& corpus) const {
  nlohmann::json j = config_.tdcf.value_or(nlohmann::json::object());
  if (!j.contains("asv_rates")) {
    std::optional<fs::path> asv;
    if (!config_.asv_scores.empty()) asv = config_.asv_scores;
    else asv = corpus.AsvScorePath();
    if (!asv || !fs::exists(*asv)) {
      spdlog::warn("no ASV scores for corpus '{}'; min t-DCF not reported", corpus.name);
      return std::nullopt;
    }
    const AsvRates r = AsvOperatingRates(ReadAsvScoreFile(*asv));
    j["asv_rates"] = {{"p_miss", r.p_miss}, {"p_fa", r.p_fa}, {"p_miss_spoof", r.p_miss_spoof}};
  }
  return TdcfParams::FromJson(j);
}

ResultRow Experiment::Record(const std::string& model_id, const std::string& subband,
                             const CorpusManifest& corpus, const TrialScores& scores,
                             const fs::path& score_file) {
  ResultRow row;
  row.model_id = model_id;
  row.subband = subband;
  row.corpus = corpus.name;
  row.metrics = subcm::Evaluate(scores, TdcfFor(corpus));
  row.score_file = fs::relative(score_file, config_.dir()).generic_string();
  WriteJson(config_.dir() / "metrics" / (model_id + "__" + corpus.name + ".json"),
            row.ToJson());
  spdlog::info("{} on {}: EER {:.2f}%{}", model_id, corpus.name, row.metrics.eer_percent,
               row.metrics.min_tdcf ? fmt::format(", min t-DCF {:.4f}", *row.metrics.min_tdcf)
                                    : std::string());
  return row;
}

void Experiment::Finalize(const std::string& model_id, std::vector<TrainRun>& runs,
                          CheckpointManifest base, const std::vector<int>& bands,
                          const std::string& subband) {
  const fs::path model_dir = config_.dir() / model_id;
  const CorpusFeatures& corpus = Features(config_.corpus, true);
  nlohmann::json selection = {{"rule", "lowest dev EER, then dev loss, then seed"},
                              {"runs", nlohmann::json::array()}};
  for (auto& run : runs) {
    const fs::path run_dir = model_dir / std::to_string(run.seed);
    WriteEpochLog(run.epoch_log, run_dir / "epoch_log.csv");
    CheckpointManifest m = base;
    m.seed = run.seed;
    m.training["best_epoch"] = run.best_epoch;
    m.training["epochs"] = run.epoch_log.size();
    m.training["stop_reason"] = StopReasonName(run.stop_reason);
    m = std::visit([&](auto& model) { return SaveCheckpoint(model, m, run_dir / "checkpoint"); },
                   run.best_model);
    WriteJson(run_dir / "manifest.json",
              {{"model_id", model_id},
               {"seed", run.seed},
               {"best_epoch", run.best_epoch},
               {"epochs", run.epoch_log.size()},
               {"stop_reason", StopReasonName(run.stop_reason)},
               {"dev_eer", run.best().dev_eer},
               {"dev_loss", run.best().dev_loss},
               {"weights_hash", m.weights_hash},
               {"corpus_hash", corpus.manifest.content_hash}});
    selection["runs"].push_back({{"seed", run.seed},
                                 {"dev_eer", run.best().dev_eer},
                                 {"dev_loss", run.best().dev_loss}});
  }
  TrainRun& best = runs[SelectBest(runs)];
  selection["selected_seed"] = best.seed;
  WriteJson(model_dir / "selection.json", selection);
  CheckpointManifest m = base;
  m.seed = best.seed;
  m.training["best_epoch"] = best.best_epoch;
  m.training["stop_reason"] = StopReasonName(best.stop_reason);
  std::visit([&](auto& model) { SaveCheckpoint(model, m, model_dir / "best"); },
             best.best_model);

  const BandSelection sel{SubbandPlan::Make(config_.n_splits), bands};
  for (Partition p : {Partition::kDev, Partition::kEval}) {
    const auto& set = p == Partition::kDev ? corpus.dev : corpus.eval;
    if (!set) continue;
    const TrialScores scores =
        MakeScores(model_id, *set, ScoreFeatures(best.classifier(), sel, *set));
    const std::string stem = ScoreStem(corpus.manifest.name, p);
    WriteScores(scores, model_dir / "scores", stem);
    if (p == Partition::kEval)
      Record(model_id, subband, corpus.manifest, scores, model_dir / "scores" / (stem + ".scores"));
  }
  for (const auto& other : config_.eval_corpora) Evaluate(model_dir / "best", other);
}

std::vector<std::string> Experiment::Pretrain() {
  const CorpusFeatures& corpus = Features(config_.corpus, true);
  const SubbandPlan plan = SubbandPlan::Make(config_.n_splits);
  const TrainConfig& tc = config_.training;
  std::vector<int> bands = config_.bands;
  if (bands.empty())
    for (int b = 0; b < plan.n(); ++b) bands.push_back(b);

  // One task per (band, seed); results land by index.
  const std::size_t n_seeds = tc.seeds.size();
  std::vector<std::optional<TrainRun>> runs(bands.size() * n_seeds);
  internal::ParallelFor(runs.size(), config_.threads, [&](std::size_t t) {
    const int band = bands[t / n_seeds];
    const std::uint64_t seed = tc.seeds[t % n_seeds];
    const std::string id = SubModelId(plan.n(), band);
    SubCnn model = BuildSubCnn(config_.Architecture(plan.width(band)),
                               DeriveSeed(seed, "init", std::uint64_t(band)));
    runs[t] = TrainModel(std::move(model), BandSelection{plan, {band}}, *corpus.train,
                         *corpus.dev, tc, seed, [&](const EpochRecord& r) {
                           spdlog::debug("{} seed {} epoch {}: train {:.4f} dev {:.4f} eer {:.2f}",
                                         id, seed, r.epoch, r.train_loss, r.dev_loss, r.dev_eer);
                         });
    spdlog::info("{} seed {}: {} epochs, best {} (dev EER {:.2f}%)", id, seed,
                 runs[t]->epoch_log.size(), runs[t]->best_epoch, runs[t]->best().dev_eer);
  });

  std::vector<std::string> ids;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const std::string id = SubModelId(plan.n(), bands[b]);
    std::vector<TrainRun> band_runs;
    for (std::size_t s = 0; s < n_seeds; ++s)
      band_runs.push_back(std::move(*runs[b * n_seeds + s]));
    CheckpointManifest base;
    base.model_id = id;
    base.plan_n = plan.n();
    base.band_indices = {bands[b]};
    base.frontend = corpus.manifest.frontend().ToString();
    base.training = {{"config", tc.ToJson()},
                     {"corpus", corpus.manifest.name},
                     {"corpus_hash", corpus.manifest.content_hash}};
    Finalize(id, band_runs, base, {bands[b]}, plan.n() == 1 ? "0-8" : plan.BandLabel(bands[b]));
    ids.push_back(id);
  }
  return ids;
}

std::string Experiment::Joint() {
  const CorpusFeatures& corpus = Features(config_.corpus, true);
  const int n = config_.n_splits;
  const SubbandPlan plan = SubbandPlan::Make(n);
  std::vector<int> bands = config_.bands;
  if (bands.empty())
    for (int b = 0; b < n; ++b) bands.push_back(b);
  const std::string id = JointModelId(n, config_.bands);
  const fs::path source = config_.pretrained.empty() ? config_.dir() : config_.pretrained;

  std::vector<SubCnn> subs;
  for (int b : bands) {
    const fs::path dir = source / SubModelId(n, b) / "best";
    if (!fs::exists(dir / "manifest"))
      throw ConfigError("no pretrained checkpoint for band " + std::to_string(b) + " (" +
                        SubModelId(n, b) + ") under " + source.string());
    Checkpoint ck = LoadCheckpoint(dir);
    if (ck.manifest.kind != CheckpointManifest::Kind::kSubCnn || ck.manifest.plan_n != n ||
        ck.manifest.band_indices != std::vector<int>{b})
      throw ConfigError("checkpoint " + dir.string() + " is not band " + std::to_string(b) +
                        " of n=" + std::to_string(n));
    subs.push_back(std::get<SubCnn>(std::move(ck.model)));
  }

  const TrainConfig& tc = config_.JointTraining();
  std::vector<std::optional<TrainRun>> runs(tc.seeds.size());
  internal::ParallelFor(runs.size(), config_.threads, [&](std::size_t i) {
    const std::uint64_t seed = tc.seeds[i];
    JointModel model = BuildJoint(subs, bands, n, true, DeriveSeed(seed, "init-joint"));
    runs[i] = TrainModel(std::move(model), BandSelection{plan, bands}, *corpus.train,
                         *corpus.dev, tc, seed, [&](const EpochRecord& r) {
                           spdlog::debug("{} seed {} epoch {}: train {:.4f} dev {:.4f} eer {:.2f}",
                                         id, seed, r.epoch, r.train_loss, r.dev_loss, r.dev_eer);
                         });
    spdlog::info("{} seed {}: {} epochs, best {} (dev EER {:.2f}%)", id, seed,
                 runs[i]->epoch_log.size(), runs[i]->best_epoch, runs[i]->best().dev_eer);
  });
  std::vector<TrainRun> all;
  for (auto& r : runs) all.push_back(std::move(*r));

  CheckpointManifest base;
  base.kind = CheckpointManifest::Kind::kJoint;
  base.model_id = id;
  base.plan_n = n;
  base.band_indices = bands;
  base.frontend = corpus.manifest.frontend().ToString();
  nlohmann::json pretrained = nlohmann::json::array();
  for (std::size_t i = 0; i < bands.size(); ++i)
    pretrained.push_back(ReadManifest(source / SubModelId(n, bands[i]) / "best").weights_hash);
  base.training = {{"config", tc.ToJson()},
                   {"corpus", corpus.manifest.name},
                   {"corpus_hash", corpus.manifest.content_hash},
                   {"pretrained_weights", pretrained}};
  Finalize(id, all, base, bands, BandsLabel(n, config_.bands));
  return id;
}

TrialScores Experiment::Score(const fs::path& checkpoint_dir, const fs::path& corpus_manifest,
                              Partition partition, const fs::path& model_dir) {
  Checkpoint ck = LoadCheckpoint(checkpoint_dir);
  CorpusFeatures& corpus = Features(corpus_manifest, partition != Partition::kEval);
  if (ck.manifest.frontend != corpus.manifest.frontend().ToString())
    spdlog::warn("front-end of {} ({}) differs from corpus '{}' ({})", checkpoint_dir.string(),
                 ck.manifest.frontend, corpus.manifest.name,
                 corpus.manifest.frontend().ToString());
  const auto& set = partition == Partition::kTrain ? corpus.train
                    : partition == Partition::kDev ? corpus.dev
                                                   : corpus.eval;
  if (!set) throw DataError("corpus '" + corpus.manifest.name + "' has no " +
                            PartitionName(partition) + " partition");
  const TrialScores scores =
      MakeScores(ck.manifest.model_id, *set,
                 ScoreFeatures(ck.classifier(), SelectionOf(ck.manifest), *set));
  WriteScores(scores, model_dir / "scores", ScoreStem(corpus.manifest.name, partition));
  return scores;
}

ResultRow Experiment::Evaluate(const fs::path& checkpoint_dir, const fs::path& corpus_manifest) {
  const CheckpointManifest m = ReadManifest(checkpoint_dir);
  const fs::path model_dir = config_.dir() / m.model_id;
  const TrialScores scores = Score(checkpoint_dir, corpus_manifest, Partition::kEval, model_dir);
  const CorpusFeatures& corpus = Features(corpus_manifest, false);
  const std::string subband = m.kind == CheckpointManifest::Kind::kSubCnn
                                  ? (m.plan_n == 1 ? std::string("0-8")
                                                   : SubbandPlan::Make(m.plan_n).BandLabel(
                                                         m.band_indices.at(0)))
                                  : BandsLabel(m.plan_n, int(m.band_indices.size()) == m.plan_n
                                                             ? std::vector<int>{}
                                                             : m.band_indices);
  return Record(m.model_id, subband, corpus.manifest, scores,
                model_dir / "scores" / (ScoreStem(corpus.manifest.name, Partition::kEval) +
                                        ".scores"));
}

ResultRow Experiment::Fuse() {
  if (!config_.fusion) throw ConfigError("no fusion section in the config");
  const FusionConfig& f = *config_.fusion;
  if (!fs::exists(config_.corpus))
    throw ConfigError("corpus manifest not found: " + config_.corpus.string());
  const CorpusManifest corpus = CorpusManifest::Load(config_.corpus);
  const fs::path source = f.source.empty() ? config_.dir() : fs::path(f.source);
  std::vector<TrialScores> dev, eval;
  std::vector<std::string> labels;
  for (const auto& sys : f.systems) {
    const fs::path dir = source / sys / "scores";
    if (f.mode == FusionMode::kWls)
      dev.push_back(ReadScores(dir, ScoreStem(corpus.name, Partition::kDev), sys));
    eval.push_back(ReadScores(dir, ScoreStem(corpus.name, Partition::kEval), sys));
    const auto [n, band] = ParseSubModelId(sys);
    labels.push_back(n == 1 ? "0-8" : SubbandPlan::Make(n).BandLabel(band));
  }
  const std::string id = f.ModelId();
  const fs::path out_dir = config_.dir() / id / "scores";
  TrialScores fused;
  if (f.mode == FusionMode::kLs) {
    fused = FuseLinear(eval);
  } else {
    LogisticFitTrace trace;
    const FusionWeights w = FitLogisticFusion(dev, f.fit, &trace);
    fused = FuseWeighted(eval, w);
    nlohmann::json dev_hashes = nlohmann::json::array();
    for (const auto& sys : f.systems)
      dev_hashes.push_back(Sha256Hex(ReadFileBytes(
          source / sys / "scores" / (ScoreStem(corpus.name, Partition::kDev) + ".scores"))));
    nlohmann::json j = w.ToJson();
    j["manifest"] = {{"systems", f.systems},
                     {"source", source.string()},
                     {"fitted_on", ScoreStem(corpus.name, Partition::kDev)},
                     {"dev_score_hashes", dev_hashes},
                     {"l2", f.fit.l2},
                     {"iterations", trace.iterations},
                     {"grad_norm", trace.grad_norm}};
    WriteJson(out_dir / "wls_weights.json", j);
  }
  fused.source = id;
  fused = RoundToFilePrecision(std::move(fused));
  const std::string stem = ScoreStem(corpus.name, Partition::kEval);
  WriteScores(fused, out_dir, stem);
  std::string subband;
  for (std::size_t i = 0; i < labels.size(); ++i) subband += (i ? "+" : "") + labels[i];
  return Record(id, subband, corpus, fused, out_dir / (stem + ".scores"));
}

bool ModelIdLess(const std::string& a, const std::string& b) {
  const auto rank = [](const std::string& id) -> std::pair<int, int> {
    if (id == "cnn") return {0, 0};
    if (id.size() >= 2 && (id[0] == 'm' || id[0] == 'j' || id[0] == 'f') &&
        std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(c); })) {
      const int k = std::stoi(id.substr(1));
      return {id[0] == 'm' ? 1 : id[0] == 'j' ? 2 : 3, k};
    }
    return {4, 0};
  };
  const auto ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb;
  return a < b;
}

std::vector<ResultRow> CollectResults(const std::vector<fs::path>& dirs) {
  std::vector<ResultRow> rows;
  std::set<std::string> seen;
  for (const auto& dir : dirs) {
    if (!fs::exists(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".json" &&
          e.path().parent_path().filename() == "metrics")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string key = fs::weakly_canonical(f).string();
      if (!seen.insert(key).second) continue;
      rows.push_back(ResultRow::FromJson(ReadJson(f)));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.model_id != b.model_id) return ModelIdLess(a.model_id, b.model_id);
    if (a.corpus != b.corpus) return a.corpus < b.corpus;
    return a.partition < b.partition;
  });
  return rows;
}

std::string RenderMarkdown(const std::vector<ResultRow>& rows) {
  std::map<std::string, double> best_eer, best_tdcf;
  for (const auto& r : rows) {
    auto e = best_eer.try_emplace(r.corpus, r.metrics.eer_percent).first;
    e->second = std::min(e->second, r.metrics.eer_percent);
    if (r.metrics.min_tdcf) {
      auto t = best_tdcf.try_emplace(r.corpus, *r.metrics.min_tdcf).first;
      t->second = std::min(t->second, *r.metrics.min_tdcf);
    }
  }
  std::string out = "| Model | Subband (kHz) | Corpus | min t-DCF | EER (%) |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    std::string tdcf = "n/a";
    if (r.metrics.min_tdcf) {
      tdcf = fmt::format("{:.4f}", *r.metrics.min_tdcf);
      if (fmt::format("{:.4f}", best_tdcf[r.corpus]) == tdcf) tdcf = "**" + tdcf + "**";
    }
    std::string eer = fmt::format("{:.2f}", r.metrics.eer_percent);
    if (fmt::format("{:.2f}", best_eer[r.corpus]) == eer) eer = "**" + eer + "**";
    out += fmt::format("| {} | {} | {} | {} | {} |\n", r.model_id, r.subband, r.corpus, tdcf,
                       eer);
  }
  return out;
}

std::string RenderCsv(const std::vector<ResultRow>& rows) {
  std::string out =
      "model_id,subband,corpus,partition,min_tdcf,eer_percent,n_bonafide,n_spoof,"
      "score_file,params_hash\n";
  for (const auto& r : rows)
    out += fmt::format("{},\"{}\",{},{},{},{:.6f},{},{},{},{}\n", r.model_id, r.subband,
                       r.corpus, r.partition,
                       r.metrics.min_tdcf ? fmt::format("{:.6f}", *r.metrics.min_tdcf) : "",
                       r.metrics.eer_percent, r.metrics.n_bonafide, r.metrics.n_spoof,
                       r.score_file, r.metrics.params_hash);
  return out;
}

}  // namespace subcm
