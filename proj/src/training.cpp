// subcm/training.cpp

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

#include "subcm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "subcm/hash.hpp"
#include "subcm/metrics.hpp"
#include "parallel.hpp"

namespace subcm {

void TrainConfig::Validate() const {
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (max_epochs <= 0) throw ConfigError("max_epochs must be positive");
  if (patience <= 0) throw ConfigError("patience must be positive");
  if (patience >= max_epochs) throw ConfigError("patience must be below max_epochs");
  if (min_improvement < 0) throw ConfigError("min_improvement must be >= 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0)) throw ConfigError("adam_epsilon must be positive");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (threads <= 0) throw ConfigError("threads must be positive");
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"batch_size", batch_size},       {"learning_rate", learning_rate},
          {"max_epochs", max_epochs},       {"patience", patience},
          {"min_improvement", min_improvement}, {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},       {"adam_epsilon", adam_epsilon},
          {"seeds", seeds},                 {"early_stopping", early_stopping}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  if (!j.is_object()) throw ConfigError("training config must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "max_epochs") c.max_epochs = value.get<int>();
      else if (key == "patience") c.patience = value.get<int>();
      else if (key == "min_improvement") c.min_improvement = value.get<double>();
      else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
      else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
      else if (key == "seeds") c.seeds = value.get<std::vector<std::uint64_t>>();
      else if (key == "early_stopping") c.early_stopping = value.get<bool>();
      else if (key == "threads") c.threads = value.get<int>();
      else throw ConfigError("unknown training key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  c.Validate();
  return c;
}

EarlyStopping::EarlyStopping(int patience, double min_improvement)
    : patience_(patience),
      min_improvement_(min_improvement),
      best_loss_(std::numeric_limits<double>::infinity()) {}

bool EarlyStopping::Update(double dev_loss) {
  ++epochs_;
  if (best_epoch_ == 0 || dev_loss <= best_loss_ - min_improvement_) {
    best_loss_ = dev_loss;
    best_epoch_ = epochs_;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

Adam::Adam(std::vector<nn::Parameter<float>*> params, double lr, double beta1,
           double beta2, double epsilon)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::Step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  const float b1 = float(beta1_), b2 = float(beta2_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& value = params_[k]->value.data;
    const auto& grad = params_[k]->grad.data;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const float g = grad[i];
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      value[i] -= float(lr_ * mhat / (std::sqrt(vhat) + epsilon_));
    }
  }
}

void FeatureSet::Add(std::string id, Label label, FeatureMatrix values) {
  if (label == Label::kUnknown) throw DataError("unlabeled utterance '" + id + "'");
  ids.push_back(std::move(id));
  labels.push_back(label);
  features.push_back(std::move(values));
}

std::size_t FeatureSet::Count(Label label) const {
  return std::size_t(std::count(labels.begin(), labels.end(), label));
}

nn::Tensor<float> BandBatch(const FeatureSet& set, std::span<const std::size_t> items,
                            const SubbandPlan& plan, int band) {
  const int width = plan.width(band);
  const int offset = plan.offset(band);
  const int frames = items.empty() ? 0 : int(set.features[items[0]].rows());
  nn::Tensor<float> t(int(items.size()), 1, frames, width);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const FeatureMatrix& m = set.features[items[i]];
    if (m.rows() != frames || m.cols() != kNumBins)
      throw DataError("feature matrix of '" + set.ids[items[i]] + "' has shape " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    float* dst = t.sample(int(i));
    for (int r = 0; r < frames; ++r)
      std::copy_n(m.data() + std::size_t(r) * kNumBins + offset, width,
                  dst + std::size_t(r) * width);
  }
  return t;
}

std::string StopReasonName(StopReason reason) {
  return reason == StopReason::kEarlyStop ? "early_stop" : "max_epochs";
}

Classifier<float>& TrainRun::classifier() {
  return std::visit([](auto& m) -> Classifier<float>& { return m; }, best_model);
}

std::size_t SelectBestIndex(std::span<const RunSummary> runs) {
  if (runs.empty()) throw ConfigError("no runs to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const RunSummary& a = runs[i];
    const RunSummary& b = runs[best];
    if (std::tie(a.dev_eer, a.dev_loss, a.seed) < std::tie(b.dev_eer, b.dev_loss, b.seed))
      best = i;
  }
  return best;
}

std::size_t SelectBest(std::span<const TrainRun> runs) {
  std::vector<RunSummary> s;
  for (const auto& r : runs) s.push_back(r.summary());
  return SelectBestIndex(s);
}

namespace {

std::vector<nn::Tensor<float>> MakeInputs(const FeatureSet& set,
                                          std::span<const std::size_t> items,
                                          const BandSelection& sel) {
  std::vector<nn::Tensor<float>> inputs;
  for (int b : sel.bands) inputs.push_back(BandBatch(set, items, sel.plan, b));
  return inputs;
}

std::vector<float> Targets(const FeatureSet& set, std::span<const std::size_t> items) {
  std::vector<float> y;
  for (std::size_t i : items) y.push_back(set.labels[i] == Label::kBonafide ? 1.0f : 0.0f);
  return y;
}

struct DevResult {
  double loss;
  double eer_percent;
};

DevResult EvaluateDev(Classifier<float>& model, const BandSelection& sel,
                      const FeatureSet& dev, int batch_size) {
  const std::vector<double> logits = LogitFeatures(model, sel, dev, batch_size);
  double loss = 0.0;
  std::vector<double> bona, spoof;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const bool is_bona = dev.labels[i] == Label::kBonafide;
    // log(1 + exp(-z)) for bonafide, log(1 + exp(z)) for spoof.
    const double m = is_bona ? z : -z;
    loss += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    (is_bona ? bona : spoof).push_back(z);
  }
  return {loss / double(logits.size()), 100.0 * ComputeEer(bona, spoof)};
}

void CheckPartition(const FeatureSet& set, const char* name) {
  if (set.size() == 0) throw DataError(std::string("empty ") + name + " partition");
  if (set.Count(Label::kBonafide) == 0 || set.Count(Label::kSpoof) == 0)
    throw DataError(std::string(name) + " partition needs both classes");
}

template <typename Model>
TrainRun Train(Model model, const BandSelection& sel, const FeatureSet& train,
               const FeatureSet& dev, const TrainConfig& config, std::uint64_t seed,
               const EpochCallback& callback) {
  config.Validate();
  CheckPartition(train, "train");
  CheckPartition(dev, "dev");
  if (model.InputWidths().size() != sel.bands.size())
    throw ConfigError("model inputs do not match the band selection");

  std::mt19937_64 shuffle_rng(DeriveSeed(seed, "shuffle"));
  std::mt19937_64 dropout_rng(DeriveSeed(seed, "dropout"));
  Adam adam(model.Parameters(), config.learning_rate, config.adam_beta1,
            config.adam_beta2, config.adam_epsilon);
  EarlyStopping stopper(config.patience, config.min_improvement);

  TrainRun run{seed, {}, 0, StopReason::kMaxEpochs, model};
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const nn::Context train_ctx{nn::Mode::kTrain, &dropout_rng};

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    // Fisher-Yates from the run's own engine; std::shuffle is not portable.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j = std::size_t(shuffle_rng() % (i + 1));
      std::swap(order[i], order[j]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + std::size_t(config.batch_size));
      const std::span<const std::size_t> items(order.data() + start, end - start);
      const auto inputs = MakeInputs(train, items, sel);
      const auto targets = Targets(train, items);
      model.ZeroGrad();
      const nn::Tensor<float> logits = model.Forward(inputs, train_ctx);
      nn::Tensor<float> grad;
      const double loss = nn::BceWithLogits(logits, targets, &grad);
      if (!std::isfinite(loss))
        throw DivergenceError(fmt::format(
            "non-finite training loss at epoch {} batch {} (seed {})", epoch,
            start / config.batch_size + 1, seed));
      model.Backward(grad);
      adam.Step();
      loss_sum += loss * double(items.size());
    }
    const DevResult d = EvaluateDev(model, sel, dev, config.batch_size);
    if (!std::isfinite(d.loss))
      throw DivergenceError(fmt::format("non-finite dev loss at epoch {} (seed {})",
                                        epoch, seed));
    EpochRecord rec{epoch, loss_sum / double(train.size()), d.loss, d.eer_percent};
    run.epoch_log.push_back(rec);
    if (callback) callback(rec);
    if (stopper.Update(d.loss)) {
      run.best_epoch = epoch;
      run.best_model = model;
    }
    if (config.early_stopping && stopper.ShouldStop()) {
      run.stop_reason = StopReason::kEarlyStop;
      break;
    }
  }
  return run;
}

}  // namespace

TrainRun TrainModel(SubCnn model, const BandSelection& selection, const FeatureSet& train,
                    const FeatureSet& dev, const TrainConfig& config,
                    std::uint64_t seed, const EpochCallback& callback) {
  return Train(std::move(model), selection, train, dev, config, seed, callback);
}

TrainRun TrainModel(JointModel model, const BandSelection& selection,
                    const FeatureSet& train, const FeatureSet& dev,
                    const TrainConfig& config, std::uint64_t seed,
                    const EpochCallback& callback) {
  return Train(std::move(model), selection, train, dev, config, seed, callback);
}

std::vector<TrainRun> TrainSubCnnSeeds(const SubCnnConfig& arch_template,
                                       const SubbandPlan& plan, int band,
                                       const FeatureSet& train, const FeatureSet& dev,
                                       const TrainConfig& config) {
  config.Validate();
  SubCnnConfig arch = arch_template;
  arch.input_bins = plan.width(band);
  const BandSelection sel{plan, {band}};
  std::vector<std::optional<TrainRun>> runs(config.seeds.size());
  internal::ParallelFor(runs.size(), config.threads, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    SubCnn model = BuildSubCnn(arch, DeriveSeed(seed, "init", std::uint64_t(band)));
    runs[i] = TrainModel(std::move(model), sel, train, dev, config, seed,
                         [&](const EpochRecord& r) {
                           spdlog::debug("band {} seed {} epoch {}: train {:.4f} dev {:.4f} eer {:.2f}",
                                         band, seed, r.epoch, r.train_loss, r.dev_loss, r.dev_eer);
                         });
  });
  std::vector<TrainRun> out;
  for (auto& r : runs) out.push_back(std::move(*r));
  return out;
}

std::vector<TrainRun> TrainJointSeeds(std::span<const SubCnn> sub_models,
                                      const SubbandPlan& plan,
                                      std::span<const int> band_indices,
                                      const FeatureSet& train, const FeatureSet& dev,
                                      const TrainConfig& config) {
  config.Validate();
  const BandSelection sel{plan, std::vector<int>(band_indices.begin(), band_indices.end())};
  std::vector<std::optional<TrainRun>> runs(config.seeds.size());
  internal::ParallelFor(runs.size(), config.threads, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    JointModel model = BuildJoint(sub_models, band_indices, plan.n(), true,
                                  DeriveSeed(seed, "init-joint"));
    runs[i] = TrainModel(std::move(model), sel, train, dev, config, seed,
                         [&](const EpochRecord& r) {
                           spdlog::debug("joint seed {} epoch {}: train {:.4f} dev {:.4f} eer {:.2f}",
                                         seed, r.epoch, r.train_loss, r.dev_loss, r.dev_eer);
                         });
  });
  std::vector<TrainRun> out;
  for (auto& r : runs) out.push_back(std::move(*r));
  return out;
}

std::vector<double> LogitFeatures(Classifier<float>& model, const BandSelection& selection,
                                  const FeatureSet& set, int batch_size) {
  std::vector<double> out;
  out.reserve(set.size());
  const nn::Context ctx{nn::Mode::kEval, nullptr};
  std::vector<std::size_t> items;
  for (std::size_t start = 0; start < set.size(); start += std::size_t(batch_size)) {
    items.clear();
    for (std::size_t i = start; i < std::min(set.size(), start + batch_size); ++i)
      items.push_back(i);
    const auto inputs = MakeInputs(set, items, selection);
    const nn::Tensor<float> logits = model.Forward(inputs, ctx);
    for (float z : logits.data) out.push_back(double(z));
  }
  return out;
}

std::vector<double> ScoreFeatures(Classifier<float>& model, const BandSelection& selection,
                                  const FeatureSet& set, int batch_size) {
  std::vector<double> s = LogitFeatures(model, selection, set, batch_size);
  for (double& z : s) z = nn::Sigmoid(z);
  return s;
}

void WriteEpochLog(std::span<const EpochRecord> log, const std::filesystem::path& path) {
  std::string text = "epoch,train_loss,dev_loss,dev_eer\n";
  for (const auto& r : log)
    text += fmt::format("{},{:.9g},{:.9g},{:.9g}\n", r.epoch, r.train_loss, r.dev_loss,
                        r.dev_eer);
  WriteFileBytes(path, text);
}

std::vector<EpochRecord> ReadEpochLog(const std::filesystem::path& path) {
  std::istringstream in(ReadFileBytes(path));
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,dev_loss,dev_eer")
    throw DataError("bad epoch log header in " + path.string());
  std::vector<EpochRecord> log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    EpochRecord r;
    char c1, c2, c3;
    std::istringstream ls(line);
    if (!(ls >> r.epoch >> c1 >> r.train_loss >> c2 >> r.dev_loss >> c3 >> r.dev_eer) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed line");
    log.push_back(r);
  }
  return log;
}

}  // namespace subcm
