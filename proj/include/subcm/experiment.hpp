// subcm/experiment.hpp

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

#ifndef SUBCM_EXPERIMENT_HPP_
#define SUBCM_EXPERIMENT_HPP_

// Experiment orchestration behind the command line tool. An experiment
// directory holds one subdirectory per model:
//
//   <out>/<experiment>/<model>/<seed>/{manifest.json,epoch_log.csv,checkpoint/}
//   <out>/<experiment>/<model>/best/            selected checkpoint
//   <out>/<experiment>/<model>/selection.json
//   <out>/<experiment>/<model>/scores/<corpus>_<partition>.{scores,labels}
//   <out>/<experiment>/metrics/<model>__<corpus>.json
//
// Model ids: cnn (full band), m1-m2 (n=2), m3-m6 (n=4), m7-m14 (n=8),
// j1/j2/j3 (joint over all bands of n=2/4/8), j4 (bands 0 and 7 of n=8),
// j<n>-b<i>-<k>... for other band subsets, f-<mode>-<systems> for fusions.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subcm/checkpoint.hpp"
#include "subcm/corpus.hpp"
#include "subcm/fusion.hpp"
#include "subcm/metrics.hpp"
#include "subcm/training.hpp"

namespace subcm {

enum class FusionMode { kLs, kWls };
std::string FusionModeName(FusionMode m);
FusionMode ParseFusionMode(const std::string& name);

struct FusionConfig {
  FusionMode mode = FusionMode::kLs;
  std::vector<std::string> systems;  // model ids
  std::string source;  // experiment dir holding the systems; "" = this one
  std::string id;      // model id of the fused system; derived when empty
  LogisticFitOptions fit;

  std::string ModelId() const;
};

struct ExperimentConfig {
  std::string experiment = "experiment";
  std::filesystem::path corpus;                    // corpus.json
  std::vector<std::filesystem::path> eval_corpora;  // cross-corpus evaluation
  int n_splits = 1;
  std::vector<int> bands;  // joint subset; empty = all bands
  std::string architecture = "reduced";  // or "full"
  TrainConfig training;
  std::optional<TrainConfig> joint_training;  // defaults to `training`
  std::filesystem::path pretrained;  // experiment dir with sub-CNN checkpoints
  std::optional<nlohmann::json> tdcf;  // overrides of the t-DCF costs/priors
  std::filesystem::path asv_scores;  // overrides the corpus ASV score file
  std::optional<FusionConfig> fusion;
  std::optional<SynthSpec> synth;
  std::filesystem::path out = "runs";
  int threads = 1;  // feature extraction and concurrent runs

  /// Keys as in ToJson(); unknown keys are a ConfigError. Relative paths
  /// are taken relative to the working directory.
  static ExperimentConfig FromJson(const nlohmann::json& j);
  static ExperimentConfig Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
  void Validate() const;

  std::filesystem::path dir() const { return out / experiment; }
  SubCnnConfig Architecture(int input_bins) const;
  const TrainConfig& JointTraining() const;
};

/// "m7" etc. for band `band` of an n-band plan; "cnn" for n = 1.
std::string SubModelId(int n, int band);
/// Inverse of SubModelId; throws ConfigError for unknown ids.
std::pair<int, int> ParseSubModelId(const std::string& id);
std::string JointModelId(int n, const std::vector<int>& bands);
/// Frequency range label, e.g. "7-8" or "0-1,7-8".
std::string BandsLabel(int n, const std::vector<int>& bands);

/// One evaluated (model, corpus) pair.
struct ResultRow {
  std::string model_id;
  std::string subband;
  std::string corpus;
  std::string partition = "eval";
  MetricsReport metrics;
  std::string score_file;  // relative to the experiment dir

  nlohmann::json ToJson() const;
  static ResultRow FromJson(const nlohmann::json& j);
};

/// Loaded partitions of a corpus, cached by the pipeline.
struct CorpusFeatures {
  CorpusManifest manifest;
  std::optional<FeatureSet> train, dev, eval;
};

class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }

  /// Trains every seed of every band's sub-CNN, selects and stores the best
  /// checkpoint per band, scores dev and eval and records eval metrics.
  /// Returns the model ids.
  std::vector<std::string> Pretrain();

  /// Builds the joint model from the best pretrained sub-CNNs of the
  /// configured bands, fine-tunes every seed, selects, scores and records.
  std::string Joint();

  /// Scores a checkpoint on one partition of a corpus, writing score and
  /// label files (and rejects, if any) under `model_dir/scores`.
  TrialScores Score(const std::filesystem::path& checkpoint_dir,
                    const std::filesystem::path& corpus_manifest, Partition partition,
                    const std::filesystem::path& model_dir);

  /// Scores `checkpoint_dir` on the eval partition of the corpus and records
  /// a result row (cross-corpus when the corpus differs from training).
  ResultRow Evaluate(const std::filesystem::path& checkpoint_dir,
                     const std::filesystem::path& corpus_manifest);

  /// Fuses the dev and eval score sets of the configured systems; WLS weights
  /// are fitted on dev and written next to the fused scores.
  ResultRow Fuse();

  /// t-DCF parameters for a corpus, or nullopt without ASV scores.
  std::optional<TdcfParams> TdcfFor(const CorpusManifest& corpus) const;

 private:
  CorpusFeatures& Features(const std::filesystem::path& manifest_path,
                           bool need_training);
  ResultRow Record(const std::string& model_id, const std::string& subband,
                   const CorpusManifest& corpus, const TrialScores& scores,
                   const std::filesystem::path& score_file);
  void Finalize(const std::string& model_id, std::vector<TrainRun>& runs,
                CheckpointManifest base, const std::vector<int>& bands,
                const std::string& subband);

  ExperimentConfig config_;
  std::map<std::string, CorpusFeatures> cache_;
};

/// Result rows stored under the metrics/ directories of the given experiment
/// (or parent) directories, sorted by model id then corpus.
std::vector<ResultRow> CollectResults(const std::vector<std::filesystem::path>& dirs);

/// Markdown table with the lowest EER and min t-DCF of each corpus in bold.
std::string RenderMarkdown(const std::vector<ResultRow>& rows);
std::string RenderCsv(const std::vector<ResultRow>& rows);

/// Natural order of model ids: cnn, m1..m14, j1..j4, then the rest.
bool ModelIdLess(const std::string& a, const std::string& b);

}  // namespace subcm

#endif  // SUBCM_EXPERIMENT_HPP_
