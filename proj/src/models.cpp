// subcm/models.cpp

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

#include "subcm/models.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "subcm/common.hpp"
#include "subcm/frontend.hpp"
#include "subcm/subband.hpp"

namespace subcm {

SubCnnConfig SubCnnConfig::Reduced(int input_bins) {
  SubCnnConfig c;
  c.input_bins = input_bins;
  c.conv_channels = {4, 4, 8, 8, 8, 8, 16, 16, 16};
  return c;
}

SubCnnConfig SubCnnConfig::Full(int input_bins) {
  SubCnnConfig c;
  c.input_bins = input_bins;
  return c;
}

void SubCnnConfig::ValidateStructure() const {
  if (conv_channels.empty()) throw ConfigError("sub-CNN needs conv layers");
  if (std::any_of(conv_channels.begin(), conv_channels.end(),
                  [](int c) { return c <= 0; }))
    throw ConfigError("conv channel counts must be positive");
  std::set<int> pools(pool_after.begin(), pool_after.end());
  if (pools.size() != pool_after.size())
    throw ConfigError("duplicate pooling position");
  for (int p : pool_after)
    if (p < 1 || p > static_cast<int>(conv_channels.size()))
      throw ConfigError("pooling position " + std::to_string(p) +
                        " outside the conv stack");
  const int shrink = 1 << pool_after.size();
  if (input_frames / shrink < 1 || input_bins / shrink < 1)
    throw ConfigError("input " + std::to_string(input_frames) + "x" +
                      std::to_string(input_bins) + " too small for " +
                      std::to_string(pool_after.size()) + " pooling layers");
  if (embedding_dim <= 0) throw ConfigError("embedding_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ConfigError("dropout must be in [0, 1)");
}

void SubCnnConfig::Validate() const {
  ValidateStructure();
  static const std::set<int> kWidths{32, 33, 64, 65, 128, 129, 257};
  if (!kWidths.count(input_bins))
    throw ConfigError("unsupported sub-CNN input width " +
                      std::to_string(input_bins));
  if (input_frames != kNumFrames)
    throw ConfigError("sub-CNN input must have 300 frames");
  if (conv_channels.size() != 9 || pool_after.size() != 5)
    throw ConfigError("sub-CNN must have 9 conv and 5 pooling layers");
  if (embedding_dim != kEmbeddingDim)
    throw ConfigError("sub-CNN embedding must be 32-dimensional");
}

nlohmann::json SubCnnConfig::ArchitectureJson() const {
  return {{"input_frames", input_frames},
          {"conv_channels", conv_channels},
          {"pool_after", pool_after},
          {"embedding_dim", embedding_dim},
          {"dropout", dropout}};
}

nlohmann::json SubCnnConfig::ToJson() const {
  nlohmann::json j = ArchitectureJson();
  j["input_bins"] = input_bins;
  return j;
}

SubCnnConfig SubCnnConfig::FromJson(const nlohmann::json& j) {
  try {
    SubCnnConfig c;
    c.input_frames = j.at("input_frames").get<int>();
    c.input_bins = j.value("input_bins", 257);
    c.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    c.pool_after = j.at("pool_after").get<std::vector<int>>();
    c.embedding_dim = j.at("embedding_dim").get<int>();
    c.dropout = j.at("dropout").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad architecture description: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

template <typename Real>
void Classifier<Real>::ZeroGrad() {
  for (auto* p : Parameters()) p->grad.Fill(Real(0));
}

template <typename Real>
std::size_t Classifier<Real>::ParameterCount() {
  std::size_t count = 0;
  for (auto* p : Parameters()) count += p->value.size();
  return count;
}

template <typename Real>
std::vector<double> Classifier<Real>::Score(
    std::span<const nn::Tensor<Real>> inputs) {
  nn::Context ctx{nn::Mode::kEval, nullptr};
  nn::Tensor<Real> logits = Forward(inputs, ctx);
  std::vector<double> scores(logits.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    scores[i] = nn::Sigmoid(logits.data[i]);
  return scores;
}

namespace {

template <typename Real>
void CheckInput(const nn::Tensor<Real>& x, int frames, int width,
                const std::string& what) {
  if (x.c() != 1 || x.h() != frames || x.w() != width)
    throw DataError(what + ": expected N x 1 x " + std::to_string(frames) +
                    " x " + std::to_string(width) + " input, got " +
                    std::to_string(x.c()) + " x " + std::to_string(x.h()) +
                    " x " + std::to_string(x.w()));
}

template <typename Real>
void AppendState(nn::Sequential<Real>& seq, const std::string& prefix,
                 std::vector<typename Classifier<Real>::StateEntry>& out) {
  std::vector<nn::Parameter<Real>*> params;
  std::vector<nn::Buffer<Real>*> buffers;
  seq.CollectParameters(params);
  seq.CollectBuffers(buffers);
  for (auto* p : params) out.push_back({prefix + p->name, &p->value, true});
  for (auto* b : buffers) out.push_back({prefix + b->name, &b->value, false});
}

}  // namespace

template <typename Real>
SubCnnT<Real>::SubCnnT(const SubCnnConfig& config, std::uint64_t init_seed)
    : config_(config) {
  config_.ValidateStructure();
  int in = 1;
  for (std::size_t i = 0; i < config_.conv_channels.size(); ++i) {
    const std::string k = std::to_string(i + 1);
    const int out = config_.conv_channels[i];
    embedding_.template Add<nn::Conv3x3<Real>>("conv" + k, in, out);
    embedding_.template Add<nn::BatchNorm<Real>>("bn" + k, out);
    embedding_.template Add<nn::Relu<Real>>("relu" + k);
    if (std::find(config_.pool_after.begin(), config_.pool_after.end(),
                  int(i + 1)) != config_.pool_after.end())
      embedding_.template Add<nn::MaxPool2x2<Real>>("pool" + k);
    in = out;
  }
  embedding_.template Add<nn::GlobalAvgPool<Real>>("gap");
  embedding_.template Add<nn::Dropout<Real>>("drop_embed", config_.dropout);
  embedding_.template Add<nn::Linear<Real>>("fc_embed", in, config_.embedding_dim);
  embedding_.template Add<nn::BatchNorm<Real>>("bn_embed", config_.embedding_dim);
  embedding_.template Add<nn::Relu<Real>>("relu_embed");
  output_.template Add<nn::Dropout<Real>>("drop_out", config_.dropout);
  output_.template Add<nn::Linear<Real>>("fc_out", config_.embedding_dim, 1);

  std::mt19937_64 rng(init_seed);
  embedding_.Initialize(rng);
  output_.Initialize(rng);
}

template <typename Real>
nn::Tensor<Real> SubCnnT<Real>::Embed(const nn::Tensor<Real>& input,
                                      const nn::Context& ctx) {
  CheckInput(input, config_.input_frames, config_.input_bins, "sub-CNN");
  return embedding_.Forward(input, ctx);
}

template <typename Real>
nn::Tensor<Real> SubCnnT<Real>::Forward(std::span<const nn::Tensor<Real>> inputs,
                                        const nn::Context& ctx) {
  if (inputs.size() != 1)
    throw DataError("sub-CNN takes exactly one band, got " +
                    std::to_string(inputs.size()));
  return output_.Forward(Embed(inputs[0], ctx), ctx);
}

template <typename Real>
void SubCnnT<Real>::Backward(const nn::Tensor<Real>& dlogits) {
  embedding_.Backward(output_.Backward(dlogits));
}

template <typename Real>
std::vector<nn::Parameter<Real>*> SubCnnT<Real>::Parameters() {
  std::vector<nn::Parameter<Real>*> out;
  embedding_.CollectParameters(out);
  output_.CollectParameters(out);
  return out;
}

template <typename Real>
std::vector<nn::Buffer<Real>*> SubCnnT<Real>::Buffers() {
  std::vector<nn::Buffer<Real>*> out;
  embedding_.CollectBuffers(out);
  output_.CollectBuffers(out);
  return out;
}

template <typename Real>
std::vector<typename Classifier<Real>::StateEntry> SubCnnT<Real>::State() {
  std::vector<typename Classifier<Real>::StateEntry> out;
  AppendState(embedding_, "embedding.", out);
  AppendState(output_, "output.", out);
  return out;
}

// ---------------------------------------------------------------------------

template <typename Real>
JointModelT<Real>::JointModelT(std::span<const SubCnnT<Real>> sub_models,
                               std::vector<int> band_indices, int plan_n,
                               bool transfer, std::uint64_t init_seed)
    : band_indices_(std::move(band_indices)), plan_n_(plan_n) {
  if (sub_models.empty()) throw ConfigError("joint model needs sub-models");
  if (band_indices_.size() != sub_models.size())
    throw ConfigError("one band index per sub-model required");
  std::mt19937_64 rng(init_seed);
  for (const auto& m : sub_models) {
    configs_.push_back(m.config());
    stages_.push_back(m.embedding());
  }
  const double dropout = configs_.front().dropout;
  const int concat = kEmbeddingDim * static_cast<int>(stages_.size());
  for (const auto& c : configs_)
    if (c.embedding_dim != kEmbeddingDim)
      throw ConfigError("joint model requires 32-dim embeddings");
  head_.template Add<nn::Dropout<Real>>("drop1", dropout);
  head_.template Add<nn::Linear<Real>>("fc1", concat, kHidden1);
  head_.template Add<nn::BatchNorm<Real>>("bn1", kHidden1);
  head_.template Add<nn::Relu<Real>>("relu1");
  head_.template Add<nn::Dropout<Real>>("drop2", dropout);
  head_.template Add<nn::Linear<Real>>("fc2", kHidden1, kHidden2);
  head_.template Add<nn::BatchNorm<Real>>("bn2", kHidden2);
  head_.template Add<nn::Relu<Real>>("relu2");
  head_.template Add<nn::Dropout<Real>>("drop3", dropout);
  head_.template Add<nn::Linear<Real>>("fc3", kHidden2, 1);
  head_.Initialize(rng);
  if (!transfer)
    for (auto& s : stages_) s.Initialize(rng);
}

template <typename Real>
std::vector<int> JointModelT<Real>::InputWidths() const {
  std::vector<int> widths;
  for (const auto& c : configs_) widths.push_back(c.input_bins);
  return widths;
}

template <typename Real>
nn::Linear<Real>& JointModelT<Real>::head_input_layer() {
  return dynamic_cast<nn::Linear<Real>&>(head_.layer(1));
}

template <typename Real>
nn::Tensor<Real> JointModelT<Real>::Embed(
    std::span<const nn::Tensor<Real>> inputs, const nn::Context& ctx) {
  if (inputs.size() != stages_.size())
    throw DataError("joint model expects " + std::to_string(stages_.size()) +
                    " bands, got " + std::to_string(inputs.size()));
  const int n = inputs[0].n();
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    CheckInput(inputs[b], configs_[b].input_frames, configs_[b].input_bins,
               "joint band " + std::to_string(band_indices_[b]));
    if (inputs[b].n() != n) throw DataError("joint bands disagree on batch size");
  }
  const int k = static_cast<int>(stages_.size());
  nn::Tensor<Real> concat(n, kEmbeddingDim * k);
  for (int b = 0; b < k; ++b) {
    nn::Tensor<Real> e = stages_[b].Forward(inputs[b], ctx);
    for (int i = 0; i < n; ++i)
      std::copy(e.sample(i), e.sample(i) + kEmbeddingDim,
                concat.sample(i) + kEmbeddingDim * b);
  }
  return concat;
}

template <typename Real>
nn::Tensor<Real> JointModelT<Real>::Forward(
    std::span<const nn::Tensor<Real>> inputs, const nn::Context& ctx) {
  return head_.Forward(Embed(inputs, ctx), ctx);
}

template <typename Real>
void JointModelT<Real>::Backward(const nn::Tensor<Real>& dlogits) {
  nn::Tensor<Real> dconcat = head_.Backward(dlogits);
  const int n = dconcat.n();
  for (int b = 0; b < num_bands(); ++b) {
    nn::Tensor<Real> de(n, kEmbeddingDim);
    for (int i = 0; i < n; ++i)
      std::copy(dconcat.sample(i) + kEmbeddingDim * b,
                dconcat.sample(i) + kEmbeddingDim * (b + 1), de.sample(i));
    stages_[b].Backward(de);
  }
}

template <typename Real>
std::vector<nn::Parameter<Real>*> JointModelT<Real>::Parameters() {
  std::vector<nn::Parameter<Real>*> out;
  for (auto& s : stages_) s.CollectParameters(out);
  head_.CollectParameters(out);
  return out;
}

template <typename Real>
std::vector<nn::Buffer<Real>*> JointModelT<Real>::Buffers() {
  std::vector<nn::Buffer<Real>*> out;
  for (auto& s : stages_) s.CollectBuffers(out);
  head_.CollectBuffers(out);
  return out;
}

template <typename Real>
std::vector<typename Classifier<Real>::StateEntry> JointModelT<Real>::State() {
  std::vector<typename Classifier<Real>::StateEntry> out;
  for (int b = 0; b < num_bands(); ++b)
    AppendState(stages_[b], "band" + std::to_string(band_indices_[b]) + ".embedding.",
                out);
  AppendState(head_, "head.", out);
  return out;
}

template class Classifier<float>;
template class Classifier<double>;
template class SubCnnT<float>;
template class SubCnnT<double>;
template class JointModelT<float>;
template class JointModelT<double>;

// ---------------------------------------------------------------------------

SubCnn BuildSubCnn(const SubCnnConfig& config, std::uint64_t init_seed) {
  config.Validate();
  SubCnn model(config, init_seed);
  spdlog::debug("sub-CNN for {} bins: {} parameters", config.input_bins,
                model.ParameterCount());
  return model;
}

JointModel BuildJoint(std::span<const SubCnn> sub_models,
                      std::span<const int> band_indices, int plan_n,
                      bool transfer, std::uint64_t init_seed) {
  const SubbandPlan plan = SubbandPlan::Make(plan_n);
  const std::vector<int> sorted = NormalizeBandSubset(plan, band_indices);
  if (!std::equal(sorted.begin(), sorted.end(), band_indices.begin(),
                  band_indices.end()))
    throw ConfigError("joint bands must be listed in ascending order");
  if (sub_models.size() != band_indices.size())
    throw ConfigError("expected " + std::to_string(band_indices.size()) +
                      " sub-models, got " + std::to_string(sub_models.size()));
  const nlohmann::json arch = sub_models.front().config().ArchitectureJson();
  for (std::size_t i = 0; i < sub_models.size(); ++i) {
    const SubCnnConfig& c = sub_models[i].config();
    c.Validate();
    if (c.input_bins != plan.width(band_indices[i]))
      throw ConfigError("sub-model " + std::to_string(i) + " has width " +
                        std::to_string(c.input_bins) + " but band " +
                        std::to_string(band_indices[i]) + " of n=" +
                        std::to_string(plan_n) + " is " +
                        std::to_string(plan.width(band_indices[i])) + " bins");
    if (c.ArchitectureJson() != arch)
      throw ConfigError("sub-models disagree on architecture");
  }
  JointModel joint(sub_models, std::vector<int>(band_indices.begin(),
                                                band_indices.end()),
                   plan_n, transfer, init_seed);
  spdlog::debug("joint model over {} bands: {} parameters", joint.num_bands(),
                joint.ParameterCount());
  return joint;
}

}  // namespace subcm
