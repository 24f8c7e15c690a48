// subcm/nn.hpp

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

#ifndef SUBCM_NN_HPP_
#define SUBCM_NN_HPP_

// Minimal layer library used by the sub-CNN and joint models: 3x3 conv,
// batch normalization, ReLU, 2x2 max pooling, global average pooling,
// dropout and fully connected layers, each with an explicit backward pass.
// Tensors are dense NCHW; fully connected activations are N x C x 1 x 1.

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace subcm::nn {

template <typename Real>
struct Tensor {
  std::array<int, 4> shape{0, 0, 1, 1};  // n, c, h, w
  std::vector<Real> data;

  Tensor() = default;
  Tensor(int n, int c, int h = 1, int w = 1)
      : shape{n, c, h, w}, data(std::size_t(n) * c * h * w, Real(0)) {}

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }
  std::size_t size() const { return data.size(); }
  /// Elements per sample.
  std::size_t stride() const { return std::size_t(c()) * h() * w(); }

  Real* sample(int i) { return data.data() + stride() * i; }
  const Real* sample(int i) const { return data.data() + stride() * i; }

  void Fill(Real v) { std::fill(data.begin(), data.end(), v); }
};

/// Learnable tensor with its gradient accumulator.
template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;
};

/// Non-learned state that is still part of a model (running statistics).
template <typename Real>
struct Buffer {
  std::string name;
  Tensor<Real> value;
};

enum class Mode { kTrain, kEval };

struct Context {
  Mode mode = Mode::kEval;
  std::mt19937_64* rng = nullptr;  // required by dropout in training mode
};

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double UniformUnit(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

template <typename Real>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }

  virtual Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx) = 0;
  /// Consumes the caches of the last Forward; accumulates parameter grads.
  virtual Tensor<Real> Backward(const Tensor<Real>& dy) = 0;
  virtual std::unique_ptr<Layer> Clone() const = 0;

  virtual void CollectParameters(std::vector<Parameter<Real>*>&) {}
  virtual void CollectBuffers(std::vector<Buffer<Real>*>&) {}
  /// Glorot-uniform weights, zero biases; no-op for parameter-free layers.
  virtual void Initialize(std::mt19937_64&) {}

 private:
  std::string name_;
};

/// 3x3 convolution, stride 1, zero padding 1, no bias (every conv is
/// followed by batch normalization).
template <typename Real>
class Conv3x3 : public Layer<Real> {
 public:
  Conv3x3(std::string name, int in_channels, int out_channels);
  Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx) override;
  Tensor<Real> Backward(const Tensor<Real>& dy) override;
  std::unique_ptr<Layer<Real>> Clone() const override;
  void CollectParameters(std::vector<Parameter<Real>*>& out) override;
  void Initialize(std::mt19937_64& rng) override;

 private:
  int in_channels_, out_channels_;
  Parameter<Real> weight_;  // out x (in * 9)
  Tensor<Real> input_;
};

/// Per-channel batch normalization over (n, h, w); running statistics use
/// momentum 0.1 and the unbiased batch variance.
template <typename Real>
class BatchNorm : public Layer<Real> {
 public:
  BatchNorm(std::string name, int channels);
  Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx) override;
  Tensor<Real> Backward(const Tensor<Real>& dy) override;
  std::unique_ptr<Layer<Real>> Clone() const override;
  void CollectParameters(std::vector<Parameter<Real>*>& out) override;
  void CollectBuffers(std::vector<Buffer<Real>*>& out) override;
  void Initialize(std::mt19937_64& rng) override;

  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

 private:
  int channels_;
  Parameter<Real> gamma_, beta_;
  Buffer<Real> running_mean_, running_var_;
  Tensor<Real> normalized_;
  std::vector<Real> inv_std_;
  bool batch_stats_ = false;
};

template <typename Real>
class Relu : public Layer<Real> {
 public:
  using Layer<Real>::Layer;
  Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx) override;
  Tensor<Real> Backward(const Tensor<Real>& dy) override;
  std::unique_ptr<Layer<Real>> Clone() const override;

 private:
  Tensor<Real> output_;
};

/// 2x2 max pooling, stride 2, odd trailing rows/columns dropped.
template <typename Real>
class MaxPool2x2 : public Layer<Real> {
 public:
  using Layer<Real>::Layer;
  Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx) override;
  Tensor<Real> Backward(const Tensor<Real>& dy) override;
  std::unique_ptr<Layer<Real>> Clone() const override;

 private:
  std::array<int, 4> input_shape_{};
  std::vector<std::uint32_t> argmax_;
};

/// Mean over h and w: N x C x H x W -> N x C x 1 x 1.
template <typename Real>
class GlobalAvgPool : public Layer<Real> {
 public:
  using Layer<Real>::Layer;
  Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx) override;
  Tensor<Real> Backward(const Tensor<Real>& dy) override;
  std::unique_ptr<Layer<Real>> Clone() const override;

 private:
  std::array<int, 4> input_shape_{};
};

/// Inverted dropout; identity in evaluation mode.
template <typename Real>
class Dropout : public Layer<Real> {
 public:
  Dropout(std::string name, double rate);
  Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx) override;
  Tensor<Real> Backward(const Tensor<Real>& dy) override;
  std::unique_ptr<Layer<Real>> Clone() const override;

 private:
  double rate_;
  std::vector<Real> mask_;
};

/// y = x W^T + b over the flattened per-sample features.
template <typename Real>
class Linear : public Layer<Real> {
 public:
  Linear(std::string name, int in_features, int out_features);
  Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx) override;
  Tensor<Real> Backward(const Tensor<Real>& dy) override;
  std::unique_ptr<Layer<Real>> Clone() const override;
  void CollectParameters(std::vector<Parameter<Real>*>& out) override;
  void Initialize(std::mt19937_64& rng) override;

  Parameter<Real>& weight() { return weight_; }  // out x in
  Parameter<Real>& bias() { return bias_; }

 private:
  int in_features_, out_features_;
  Parameter<Real> weight_, bias_;
  Tensor<Real> input_;
};

/// Ordered chain of layers with value semantics (copies are deep).
template <typename Real>
class Sequential {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <typename L, typename... Args>
  L& Add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<Real> Forward(const Tensor<Real>& x, const Context& ctx);
  Tensor<Real> Backward(const Tensor<Real>& dy);
  void Initialize(std::mt19937_64& rng);
  void CollectParameters(std::vector<Parameter<Real>*>& out);
  void CollectBuffers(std::vector<Buffer<Real>*>& out);

  std::size_t size() const { return layers_.size(); }
  Layer<Real>& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer<Real>>> layers_;
};

/// Mean binary cross-entropy on logits; writes dL/dlogit into `grad` when
/// non-null. `targets` are 1 for bonafide and 0 for spoof.
template <typename Real>
double BceWithLogits(const Tensor<Real>& logits, std::span<const float> targets,
                     Tensor<Real>* grad);

double Sigmoid(double z);

}  // namespace subcm::nn

#endif  // SUBCM_NN_HPP_
