// subcm/models.hpp

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

#ifndef SUBCM_MODELS_HPP_
#define SUBCM_MODELS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "subcm/nn.hpp"

namespace subcm {

inline constexpr int kEmbeddingDim = 32;

/// Architecture of one sub-CNN. The production stack has nine 3x3
/// conv + batch-norm + ReLU blocks with 2x2 max pooling after blocks
/// 2, 4, 6, 8 and 9, then global average pooling, FC(32) + BN + ReLU (the
/// embedding) and FC(1) (the output logit). Dropout precedes every FC layer.
struct SubCnnConfig {
  int input_frames = 300;
  int input_bins = 257;
  std::vector<int> conv_channels{16, 16, 32, 32, 64, 64, 128, 128, 256};
  std::vector<int> pool_after{2, 4, 6, 8, 9};  // 1-based conv indices
  int embedding_dim = kEmbeddingDim;
  double dropout = 0.5;

  /// Same channels scaled down for desk-scale runs: [4,4,8,8,8,8,16,16,16].
  static SubCnnConfig Reduced(int input_bins);
  static SubCnnConfig Full(int input_bins);

  /// Production contract: 9 conv layers, 5 pools, 32-dim embedding and a
  /// band width produced by one of the supported subband plans.
  void Validate() const;
  /// Structural consistency only (used for small test networks).
  void ValidateStructure() const;

  /// Architecture without the input width; sub-CNNs that may be joined must
  /// agree on it.
  nlohmann::json ArchitectureJson() const;
  nlohmann::json ToJson() const;
  static SubCnnConfig FromJson(const nlohmann::json& j);

  bool operator==(const SubCnnConfig&) const = default;
};

/// Common interface of every trainable detector: k band inputs, one logit.
template <typename Real>
class Classifier {
 public:
  virtual ~Classifier() = default;

  /// Widths of the expected band inputs, in ascending frequency order.
  virtual std::vector<int> InputWidths() const = 0;
  /// inputs[b] is N x 1 x frames x width(b). Returns N x 1 logits.
  virtual nn::Tensor<Real> Forward(std::span<const nn::Tensor<Real>> inputs,
                                   const nn::Context& ctx) = 0;
  virtual void Backward(const nn::Tensor<Real>& dlogits) = 0;
  virtual std::vector<nn::Parameter<Real>*> Parameters() = 0;
  virtual std::vector<nn::Buffer<Real>*> Buffers() = 0;

  /// Parameters and buffers under model-qualified names, the unit of
  /// checkpointing and transfer.
  struct StateEntry {
    std::string name;
    nn::Tensor<Real>* tensor;
    bool learnable;
  };
  virtual std::vector<StateEntry> State() = 0;

  void ZeroGrad();
  std::size_t ParameterCount();
  /// Bonafide posteriors for a batch, in evaluation mode.
  std::vector<double> Score(std::span<const nn::Tensor<Real>> inputs);
};

template <typename Real>
class SubCnnT : public Classifier<Real> {
 public:
  /// Builds and Glorot-initializes from `init_seed`. Checks structure only;
  /// BuildSubCnn() adds the production checks.
  SubCnnT(const SubCnnConfig& config, std::uint64_t init_seed);

  const SubCnnConfig& config() const { return config_; }

  std::vector<int> InputWidths() const override { return {config_.input_bins}; }
  nn::Tensor<Real> Forward(std::span<const nn::Tensor<Real>> inputs,
                           const nn::Context& ctx) override;
  void Backward(const nn::Tensor<Real>& dlogits) override;
  std::vector<nn::Parameter<Real>*> Parameters() override;
  std::vector<nn::Buffer<Real>*> Buffers() override;
  std::vector<typename Classifier<Real>::StateEntry> State() override;

  /// N x 32 embedding (the network without its output layer).
  nn::Tensor<Real> Embed(const nn::Tensor<Real>& input, const nn::Context& ctx);

  nn::Sequential<Real>& embedding() { return embedding_; }
  const nn::Sequential<Real>& embedding() const { return embedding_; }

 private:
  SubCnnConfig config_;
  nn::Sequential<Real> embedding_;
  nn::Sequential<Real> output_;
};

/// n sub-CNN embedding stages whose 32-dim outputs are concatenated in
/// ascending frequency order and classified by an FFNN head
/// 32n -> 256 -> 128 -> 1 (BN + ReLU on the hidden layers).
template <typename Real>
class JointModelT : public Classifier<Real> {
 public:
  static constexpr int kHidden1 = 256;
  static constexpr int kHidden2 = 128;

  /// Copies the embedding stages of `sub_models` (parameters and running
  /// statistics) when `transfer` is true; otherwise re-initializes them.
  /// Head weights are Glorot-uniform from `init_seed`, biases zero.
  /// `band_indices` records which plan bands the stages belong to.
  JointModelT(std::span<const SubCnnT<Real>> sub_models,
              std::vector<int> band_indices, int plan_n, bool transfer,
              std::uint64_t init_seed);

  std::vector<int> InputWidths() const override;
  nn::Tensor<Real> Forward(std::span<const nn::Tensor<Real>> inputs,
                           const nn::Context& ctx) override;
  void Backward(const nn::Tensor<Real>& dlogits) override;
  std::vector<nn::Parameter<Real>*> Parameters() override;
  std::vector<nn::Buffer<Real>*> Buffers() override;
  std::vector<typename Classifier<Real>::StateEntry> State() override;

  const std::vector<SubCnnConfig>& band_configs() const { return configs_; }
  const std::vector<int>& band_indices() const { return band_indices_; }
  int plan_n() const { return plan_n_; }
  int num_bands() const { return static_cast<int>(stages_.size()); }

  nn::Sequential<Real>& stage(int i) { return stages_.at(i); }
  nn::Sequential<Real>& head() { return head_; }
  /// First head FC layer (input 32n), for inspection and surgery.
  nn::Linear<Real>& head_input_layer();

  /// Concatenated N x 32n embedding.
  nn::Tensor<Real> Embed(std::span<const nn::Tensor<Real>> inputs,
                         const nn::Context& ctx);

 private:
  std::vector<SubCnnConfig> configs_;
  std::vector<int> band_indices_;
  int plan_n_;
  std::vector<nn::Sequential<Real>> stages_;
  nn::Sequential<Real> head_;
};

using SubCnn = SubCnnT<float>;
using JointModel = JointModelT<float>;

/// Production constructor: validates the full contract and logs the
/// parameter count.
SubCnn BuildSubCnn(const SubCnnConfig& config, std::uint64_t init_seed);

/// Checks that `sub_models` match the widths of `band_indices` in an
/// n-band plan and share one architecture, then builds the joint model.
JointModel BuildJoint(std::span<const SubCnn> sub_models,
                      std::span<const int> band_indices, int plan_n,
                      bool transfer, std::uint64_t init_seed);

/// Copies a feature matrix batch into an N x 1 x frames x width tensor.
template <typename Real, typename Matrix>
nn::Tensor<Real> MakeInput(std::span<const Matrix* const> items) {
  const int n = static_cast<int>(items.size());
  const int frames = n ? static_cast<int>(items[0]->rows()) : 0;
  const int width = n ? static_cast<int>(items[0]->cols()) : 0;
  nn::Tensor<Real> t(n, 1, frames, width);
  for (int i = 0; i < n; ++i) {
    Real* dst = t.sample(i);
    for (int r = 0; r < frames; ++r)
      for (int c = 0; c < width; ++c)
        dst[std::size_t(r) * width + c] = static_cast<Real>((*items[i])(r, c));
  }
  return t;
}

}  // namespace subcm

#endif  // SUBCM_MODELS_HPP_
