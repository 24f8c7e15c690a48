// subcm/training.hpp

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

#ifndef SUBCM_TRAINING_HPP_
#define SUBCM_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "subcm/hash.hpp"
#include "subcm/models.hpp"
#include "subcm/subband.hpp"

namespace subcm {

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 1e-4;
  int max_epochs = 100;
  int patience = 5;
  double min_improvement = 1e-6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// Without early stopping training always runs max_epochs.
  bool early_stopping = true;
  /// Runs (seeds, bands) trained concurrently; never changes results.
  int threads = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  /// Missing keys keep their defaults; unknown keys are a ConfigError.
  static TrainConfig FromJson(const nlohmann::json& j);
};

/// Patience counter over dev losses. An epoch improves when its loss is
/// below the best so far by at least `min_improvement`.
class EarlyStopping {
 public:
  EarlyStopping(int patience, double min_improvement);

  /// Records the next epoch's dev loss; true when it is a new best.
  bool Update(double dev_loss);
  bool ShouldStop() const { return bad_epochs_ >= patience_; }

  int best_epoch() const { return best_epoch_; }  // 1-based, 0 before Update
  double best_loss() const { return best_loss_; }
  int epochs_seen() const { return epochs_; }

 private:
  int patience_;
  double min_improvement_;
  double best_loss_;
  int best_epoch_ = 0;
  int bad_epochs_ = 0;
  int epochs_ = 0;
};

/// Adam over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<nn::Parameter<float>*> params, double lr, double beta1,
       double beta2, double epsilon);
  void Step();
  long steps() const { return t_; }

 private:
  std::vector<nn::Parameter<float>*> params_;
  std::vector<std::vector<float>> m_, v_;
  double lr_, beta1_, beta2_, epsilon_;
  long t_ = 0;
};

/// Labeled full-band spectrograms of one partition, held in memory.
struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<FeatureMatrix> features;  // kNumFrames x kNumBins each

  std::size_t size() const { return ids.size(); }
  void Add(std::string id, Label label, FeatureMatrix values);
  std::size_t Count(Label label) const;
};

/// Which columns of the full-band spectrogram feed each model input.
struct BandSelection {
  SubbandPlan plan = SubbandPlan::Make(1);
  std::vector<int> bands{0};  // ascending plan band indices
};

/// N x 1 x frames x width batch of one band for the given items.
nn::Tensor<float> BandBatch(const FeatureSet& set, std::span<const std::size_t> items,
                            const SubbandPlan& plan, int band);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_eer = 0.0;  // percent
};

enum class StopReason { kEarlyStop, kMaxEpochs };
std::string StopReasonName(StopReason reason);

struct RunSummary {
  std::uint64_t seed = 0;
  double dev_eer = 0.0;   // at the best epoch
  double dev_loss = 0.0;  // idem
};

struct TrainRun {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epoch_log;
  int best_epoch = 0;
  StopReason stop_reason = StopReason::kMaxEpochs;
  /// Weights of the best (lowest dev loss) epoch.
  std::variant<SubCnn, JointModel> best_model;

  const EpochRecord& best() const { return epoch_log.at(best_epoch - 1); }
  RunSummary summary() const { return {seed, best().dev_eer, best().dev_loss}; }
  Classifier<float>& classifier();
};

/// Lowest dev EER; ties by lower dev loss, then lower seed.
std::size_t SelectBestIndex(std::span<const RunSummary> runs);
std::size_t SelectBest(std::span<const TrainRun> runs);

/// Called after every epoch; used for progress logging.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains an initialized model with the given seed's shuffling and dropout
/// streams and keeps a copy of the best epoch's weights.
TrainRun TrainModel(SubCnn model, const BandSelection& selection,
                    const FeatureSet& train, const FeatureSet& dev,
                    const TrainConfig& config, std::uint64_t seed,
                    const EpochCallback& callback = {});
TrainRun TrainModel(JointModel model, const BandSelection& selection,
                    const FeatureSet& train, const FeatureSet& dev,
                    const TrainConfig& config, std::uint64_t seed,
                    const EpochCallback& callback = {});

/// Sub-CNN for `band` of `plan`, initialized from the seed, trained once per
/// configured seed.
std::vector<TrainRun> TrainSubCnnSeeds(const SubCnnConfig& arch_template,
                                       const SubbandPlan& plan, int band,
                                       const FeatureSet& train, const FeatureSet& dev,
                                       const TrainConfig& config);

/// Joint model over `band_indices` built from pretrained sub-CNNs (one per
/// band, same order), trained once per configured seed.
std::vector<TrainRun> TrainJointSeeds(std::span<const SubCnn> sub_models,
                                      const SubbandPlan& plan,
                                      std::span<const int> band_indices,
                                      const FeatureSet& train, const FeatureSet& dev,
                                      const TrainConfig& config);

/// Scores of a model on a feature set: bonafide posteriors in dataset order.
std::vector<double> ScoreFeatures(Classifier<float>& model, const BandSelection& selection,
                                  const FeatureSet& set, int batch_size = 32);
/// Logits, which keep their order where posteriors saturate.
std::vector<double> LogitFeatures(Classifier<float>& model, const BandSelection& selection,
                                  const FeatureSet& set, int batch_size = 32);

void WriteEpochLog(std::span<const EpochRecord> log, const std::filesystem::path& path);
std::vector<EpochRecord> ReadEpochLog(const std::filesystem::path& path);

}  // namespace subcm

#endif  // SUBCM_TRAINING_HPP_
