// subcm/nn.cpp

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

#include "subcm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "subcm/common.hpp"

namespace subcm::nn {
namespace {

template <typename Real>
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using MatrixMap = Eigen::Map<RowMatrix<Real>>;
template <typename Real>
using ConstMatrixMap = Eigen::Map<const RowMatrix<Real>>;

void CheckShape(bool ok, const std::string& layer, const std::string& what) {
  if (!ok) throw DataError(layer + ": " + what);
}

template <typename Real>
void GlorotUniform(Tensor<Real>& t, int fan_in, int fan_out,
                   std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Real& v : t.data) v = static_cast<Real>((2.0 * UniformUnit(rng) - 1.0) * limit);
}

// Unfolds one C x H x W sample into (C * 9) x (H * W) patches for a 3x3
// kernel with zero padding 1.
template <typename Real>
void Im2Col(const Real* in, int channels, int height, int width, Real* cols) {
  const std::size_t plane = std::size_t(height) * width;
  for (int c = 0; c < channels; ++c) {
    const Real* src_plane = in + plane * c;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        Real* dst = cols + plane * (c * 9 + ky * 3 + kx);
        const int dx = kx - 1;
        for (int y = 0; y < height; ++y) {
          Real* d = dst + std::size_t(y) * width;
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= height) {
            std::fill(d, d + width, Real(0));
            continue;
          }
          const Real* s = src_plane + std::size_t(sy) * width;
          if (dx < 0) {
            d[0] = Real(0);
            std::copy(s, s + width - 1, d + 1);
          } else if (dx == 0) {
            std::copy(s, s + width, d);
          } else {
            std::copy(s + 1, s + width, d);
            d[width - 1] = Real(0);
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters patch gradients back onto the sample.
template <typename Real>
void Col2ImAdd(const Real* cols, int channels, int height, int width, Real* out) {
  const std::size_t plane = std::size_t(height) * width;
  for (int c = 0; c < channels; ++c) {
    Real* dst_plane = out + plane * c;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Real* src = cols + plane * (c * 9 + ky * 3 + kx);
        const int dx = kx - 1;
        for (int y = 0; y < height; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= height) continue;
          const Real* s = src + std::size_t(y) * width;
          Real* d = dst_plane + std::size_t(sy) * width;
          if (dx < 0) {
            for (int x = 1; x < width; ++x) d[x - 1] += s[x];
          } else if (dx == 0) {
            for (int x = 0; x < width; ++x) d[x] += s[x];
          } else {
            for (int x = 0; x + 1 < width; ++x) d[x + 1] += s[x];
          }
        }
      }
    }
  }
}

}  // namespace

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------

template <typename Real>
Conv3x3<Real>::Conv3x3(std::string name, int in_channels, int out_channels)
    : Layer<Real>(std::move(name)),
      in_channels_(in_channels),
      out_channels_(out_channels) {
  weight_.name = this->name() + ".weight";
  weight_.value = Tensor<Real>(out_channels, in_channels * 9);
  weight_.grad = Tensor<Real>(out_channels, in_channels * 9);
}

template <typename Real>
Tensor<Real> Conv3x3<Real>::Forward(const Tensor<Real>& x, const Context&) {
  CheckShape(x.c() == in_channels_, this->name(), "channel mismatch");
  input_ = x;
  const int h = x.h(), w = x.w();
  const int patch = in_channels_ * 9;
  const int plane = h * w;
  Tensor<Real> y(x.n(), out_channels_, h, w);
  std::vector<Real> cols(std::size_t(patch) * plane);
  ConstMatrixMap<Real> weight(weight_.value.data.data(), out_channels_, patch);
  ConstMatrixMap<Real> col_map(cols.data(), patch, plane);
  for (int i = 0; i < x.n(); ++i) {
    Im2Col(x.sample(i), in_channels_, h, w, cols.data());
    MatrixMap<Real> out(y.sample(i), out_channels_, plane);
    out.noalias() = weight * col_map;
  }
  return y;
}

template <typename Real>
Tensor<Real> Conv3x3<Real>::Backward(const Tensor<Real>& dy) {
  const int h = input_.h(), w = input_.w();
  const int patch = in_channels_ * 9;
  const int plane = h * w;
  Tensor<Real> dx(input_.n(), in_channels_, h, w);
  std::vector<Real> cols(std::size_t(patch) * plane);
  std::vector<Real> dcols(std::size_t(patch) * plane);
  ConstMatrixMap<Real> weight(weight_.value.data.data(), out_channels_, patch);
  MatrixMap<Real> dweight(weight_.grad.data.data(), out_channels_, patch);
  MatrixMap<Real> col_map(cols.data(), patch, plane);
  MatrixMap<Real> dcol_map(dcols.data(), patch, plane);
  for (int i = 0; i < input_.n(); ++i) {
    Im2Col(input_.sample(i), in_channels_, h, w, cols.data());
    ConstMatrixMap<Real> g(dy.sample(i), out_channels_, plane);
    dweight.noalias() += g * col_map.transpose();
    dcol_map.noalias() = weight.transpose() * g;
    Col2ImAdd(dcols.data(), in_channels_, h, w, dx.sample(i));
  }
  input_ = Tensor<Real>();
  return dx;
}

template <typename Real>
std::unique_ptr<Layer<Real>> Conv3x3<Real>::Clone() const {
  auto copy = std::make_unique<Conv3x3<Real>>(*this);
  copy->input_ = Tensor<Real>();
  return copy;
}

template <typename Real>
void Conv3x3<Real>::CollectParameters(std::vector<Parameter<Real>*>& out) {
  out.push_back(&weight_);
}

template <typename Real>
void Conv3x3<Real>::Initialize(std::mt19937_64& rng) {
  GlorotUniform(weight_.value, in_channels_ * 9, out_channels_ * 9, rng);
}

// ---------------------------------------------------------------------------

template <typename Real>
BatchNorm<Real>::BatchNorm(std::string name, int channels)
    : Layer<Real>(std::move(name)), channels_(channels) {
  gamma_ = {this->name() + ".gamma", Tensor<Real>(1, channels), Tensor<Real>(1, channels)};
  beta_ = {this->name() + ".beta", Tensor<Real>(1, channels), Tensor<Real>(1, channels)};
  running_mean_ = {this->name() + ".running_mean", Tensor<Real>(1, channels)};
  running_var_ = {this->name() + ".running_var", Tensor<Real>(1, channels)};
  gamma_.value.Fill(Real(1));
  running_var_.value.Fill(Real(1));
}

template <typename Real>
Tensor<Real> BatchNorm<Real>::Forward(const Tensor<Real>& x, const Context& ctx) {
  CheckShape(x.c() == channels_, this->name(), "channel mismatch");
  const int n = x.n();
  const std::size_t plane = std::size_t(x.h()) * x.w();
  const double count = double(n) * plane;
  batch_stats_ = ctx.mode == Mode::kTrain;
  normalized_ = Tensor<Real>(x.n(), x.c(), x.h(), x.w());
  inv_std_.assign(channels_, Real(0));
  Tensor<Real> y(x.n(), x.c(), x.h(), x.w());
  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (batch_stats_) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const Real* p = x.sample(i) + plane * c;
        for (std::size_t k = 0; k < plane; ++k) sum += p[k];
      }
      mean = sum / count;
      double sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const Real* p = x.sample(i) + plane * c;
        for (std::size_t k = 0; k < plane; ++k) {
          const double d = p[k] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
      const double unbiased = count > 1 ? var * count / (count - 1) : var;
      running_mean_.value.data[c] = static_cast<Real>(
          (1 - kMomentum) * running_mean_.value.data[c] + kMomentum * mean);
      running_var_.value.data[c] = static_cast<Real>(
          (1 - kMomentum) * running_var_.value.data[c] + kMomentum * unbiased);
    } else {
      mean = running_mean_.value.data[c];
      var = running_var_.value.data[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + kEpsilon);
    inv_std_[c] = static_cast<Real>(inv_std);
    const Real g = gamma_.value.data[c], b = beta_.value.data[c];
    for (int i = 0; i < n; ++i) {
      const Real* p = x.sample(i) + plane * c;
      Real* xn = normalized_.sample(i) + plane * c;
      Real* out = y.sample(i) + plane * c;
      for (std::size_t k = 0; k < plane; ++k) {
        xn[k] = static_cast<Real>((p[k] - mean) * inv_std);
        out[k] = g * xn[k] + b;
      }
    }
  }
  return y;
}

template <typename Real>
Tensor<Real> BatchNorm<Real>::Backward(const Tensor<Real>& dy) {
  const int n = dy.n();
  const std::size_t plane = std::size_t(dy.h()) * dy.w();
  const double count = double(n) * plane;
  Tensor<Real> dx(dy.n(), dy.c(), dy.h(), dy.w());
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xn = 0.0;
    for (int i = 0; i < n; ++i) {
      const Real* g = dy.sample(i) + plane * c;
      const Real* xn = normalized_.sample(i) + plane * c;
      for (std::size_t k = 0; k < plane; ++k) {
        sum_dy += g[k];
        sum_dy_xn += double(g[k]) * xn[k];
      }
    }
    gamma_.grad.data[c] += static_cast<Real>(sum_dy_xn);
    beta_.grad.data[c] += static_cast<Real>(sum_dy);
    const double scale = double(gamma_.value.data[c]) * inv_std_[c];
    for (int i = 0; i < n; ++i) {
      const Real* g = dy.sample(i) + plane * c;
      const Real* xn = normalized_.sample(i) + plane * c;
      Real* out = dx.sample(i) + plane * c;
      if (batch_stats_) {
        for (std::size_t k = 0; k < plane; ++k)
          out[k] = static_cast<Real>(
              scale * (g[k] - sum_dy / count - xn[k] * sum_dy_xn / count));
      } else {
        for (std::size_t k = 0; k < plane; ++k)
          out[k] = static_cast<Real>(scale * g[k]);
      }
    }
  }
  normalized_ = Tensor<Real>();
  return dx;
}

template <typename Real>
std::unique_ptr<Layer<Real>> BatchNorm<Real>::Clone() const {
  auto copy = std::make_unique<BatchNorm<Real>>(*this);
  copy->normalized_ = Tensor<Real>();
  return copy;
}

template <typename Real>
void BatchNorm<Real>::CollectParameters(std::vector<Parameter<Real>*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

template <typename Real>
void BatchNorm<Real>::CollectBuffers(std::vector<Buffer<Real>*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

template <typename Real>
void BatchNorm<Real>::Initialize(std::mt19937_64&) {
  gamma_.value.Fill(Real(1));
  beta_.value.Fill(Real(0));
  running_mean_.value.Fill(Real(0));
  running_var_.value.Fill(Real(1));
}

// ---------------------------------------------------------------------------

template <typename Real>
Tensor<Real> Relu<Real>::Forward(const Tensor<Real>& x, const Context&) {
  output_ = x;
  for (Real& v : output_.data) v = v < Real(0) ? Real(0) : v;  // keeps NaN
  return output_;
}

template <typename Real>
Tensor<Real> Relu<Real>::Backward(const Tensor<Real>& dy) {
  Tensor<Real> dx = dy;
  for (std::size_t k = 0; k < dx.size(); ++k)
    if (!(output_.data[k] > Real(0))) dx.data[k] = Real(0);
  output_ = Tensor<Real>();
  return dx;
}

template <typename Real>
std::unique_ptr<Layer<Real>> Relu<Real>::Clone() const {
  return std::make_unique<Relu<Real>>(this->name());
}

// ---------------------------------------------------------------------------

template <typename Real>
Tensor<Real> MaxPool2x2<Real>::Forward(const Tensor<Real>& x, const Context&) {
  const int ho = x.h() / 2, wo = x.w() / 2;
  CheckShape(ho > 0 && wo > 0, this->name(), "input too small to pool");
  input_shape_ = x.shape;
  Tensor<Real> y(x.n(), x.c(), ho, wo);
  argmax_.assign(y.size(), 0);
  std::size_t o = 0;
  for (int i = 0; i < x.n(); ++i) {
    for (int c = 0; c < x.c(); ++c) {
      const Real* p = x.sample(i) + std::size_t(c) * x.h() * x.w();
      for (int r = 0; r < ho; ++r) {
        for (int q = 0; q < wo; ++q, ++o) {
          std::uint32_t best = std::uint32_t(2 * r) * x.w() + 2 * q;
          for (std::uint32_t cand :
               {best + 1, best + std::uint32_t(x.w()), best + std::uint32_t(x.w()) + 1})
            if (p[cand] > p[best] || p[cand] != p[cand]) best = cand;
          argmax_[o] = best;
          y.data[o] = p[best];
        }
      }
    }
  }
  return y;
}

template <typename Real>
Tensor<Real> MaxPool2x2<Real>::Backward(const Tensor<Real>& dy) {
  Tensor<Real> dx(input_shape_[0], input_shape_[1], input_shape_[2], input_shape_[3]);
  const std::size_t in_plane = std::size_t(input_shape_[2]) * input_shape_[3];
  const std::size_t out_plane = std::size_t(dy.h()) * dy.w();
  for (std::size_t o = 0; o < dy.size(); ++o) {
    const std::size_t plane_index = o / out_plane;
    dx.data[plane_index * in_plane + argmax_[o]] += dy.data[o];
  }
  argmax_.clear();
  return dx;
}

template <typename Real>
std::unique_ptr<Layer<Real>> MaxPool2x2<Real>::Clone() const {
  return std::make_unique<MaxPool2x2<Real>>(this->name());
}

// ---------------------------------------------------------------------------

template <typename Real>
Tensor<Real> GlobalAvgPool<Real>::Forward(const Tensor<Real>& x, const Context&) {
  input_shape_ = x.shape;
  const std::size_t plane = std::size_t(x.h()) * x.w();
  Tensor<Real> y(x.n(), x.c());
  for (int i = 0; i < x.n(); ++i)
    for (int c = 0; c < x.c(); ++c) {
      const Real* p = x.sample(i) + plane * c;
      double sum = 0.0;
      for (std::size_t k = 0; k < plane; ++k) sum += p[k];
      y.sample(i)[c] = static_cast<Real>(sum / plane);
    }
  return y;
}

template <typename Real>
Tensor<Real> GlobalAvgPool<Real>::Backward(const Tensor<Real>& dy) {
  Tensor<Real> dx(input_shape_[0], input_shape_[1], input_shape_[2], input_shape_[3]);
  const std::size_t plane = std::size_t(dx.h()) * dx.w();
  for (int i = 0; i < dx.n(); ++i)
    for (int c = 0; c < dx.c(); ++c) {
      const Real g = static_cast<Real>(dy.sample(i)[c] / Real(plane));
      Real* p = dx.sample(i) + plane * c;
      std::fill(p, p + plane, g);
    }
  return dx;
}

template <typename Real>
std::unique_ptr<Layer<Real>> GlobalAvgPool<Real>::Clone() const {
  return std::make_unique<GlobalAvgPool<Real>>(this->name());
}

// ---------------------------------------------------------------------------

template <typename Real>
Dropout<Real>::Dropout(std::string name, double rate)
    : Layer<Real>(std::move(name)), rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ConfigError("dropout rate must be in [0, 1)");
}

template <typename Real>
Tensor<Real> Dropout<Real>::Forward(const Tensor<Real>& x, const Context& ctx) {
  mask_.clear();
  if (ctx.mode != Mode::kTrain || rate_ == 0.0) return x;
  if (ctx.rng == nullptr) throw ConfigError("dropout needs an RNG in training");
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate_));
  mask_.resize(x.size());
  Tensor<Real> y = x;
  for (std::size_t k = 0; k < y.size(); ++k) {
    mask_[k] = UniformUnit(*ctx.rng) >= rate_ ? keep_scale : Real(0);
    y.data[k] *= mask_[k];
  }
  return y;
}

template <typename Real>
Tensor<Real> Dropout<Real>::Backward(const Tensor<Real>& dy) {
  if (mask_.empty()) return dy;
  Tensor<Real> dx = dy;
  for (std::size_t k = 0; k < dx.size(); ++k) dx.data[k] *= mask_[k];
  return dx;
}

template <typename Real>
std::unique_ptr<Layer<Real>> Dropout<Real>::Clone() const {
  return std::make_unique<Dropout<Real>>(this->name(), rate_);
}

// ---------------------------------------------------------------------------

template <typename Real>
Linear<Real>::Linear(std::string name, int in_features, int out_features)
    : Layer<Real>(std::move(name)),
      in_features_(in_features),
      out_features_(out_features) {
  weight_ = {this->name() + ".weight", Tensor<Real>(out_features, in_features),
             Tensor<Real>(out_features, in_features)};
  bias_ = {this->name() + ".bias", Tensor<Real>(1, out_features),
           Tensor<Real>(1, out_features)};
}

template <typename Real>
Tensor<Real> Linear<Real>::Forward(const Tensor<Real>& x, const Context&) {
  CheckShape(static_cast<int>(x.stride()) == in_features_, this->name(),
             "expected " + std::to_string(in_features_) + " features, got " +
                 std::to_string(x.stride()));
  input_ = x;
  Tensor<Real> y(x.n(), out_features_);
  ConstMatrixMap<Real> in(x.data.data(), x.n(), in_features_);
  ConstMatrixMap<Real> weight(weight_.value.data.data(), out_features_, in_features_);
  MatrixMap<Real> out(y.data.data(), x.n(), out_features_);
  out.noalias() = in * weight.transpose();
  for (int i = 0; i < x.n(); ++i)
    for (int j = 0; j < out_features_; ++j) out(i, j) += bias_.value.data[j];
  return y;
}

template <typename Real>
Tensor<Real> Linear<Real>::Backward(const Tensor<Real>& dy) {
  const int n = input_.n();
  ConstMatrixMap<Real> in(input_.data.data(), n, in_features_);
  ConstMatrixMap<Real> g(dy.data.data(), n, out_features_);
  ConstMatrixMap<Real> weight(weight_.value.data.data(), out_features_, in_features_);
  MatrixMap<Real> dweight(weight_.grad.data.data(), out_features_, in_features_);
  dweight.noalias() += g.transpose() * in;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < out_features_; ++j) bias_.grad.data[j] += g(i, j);
  Tensor<Real> dx;
  dx.shape = input_.shape;
  dx.data.resize(input_.size());
  MatrixMap<Real> dx_map(dx.data.data(), n, in_features_);
  dx_map.noalias() = g * weight;
  input_ = Tensor<Real>();
  return dx;
}

template <typename Real>
std::unique_ptr<Layer<Real>> Linear<Real>::Clone() const {
  auto copy = std::make_unique<Linear<Real>>(*this);
  copy->input_ = Tensor<Real>();
  return copy;
}

template <typename Real>
void Linear<Real>::CollectParameters(std::vector<Parameter<Real>*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

template <typename Real>
void Linear<Real>::Initialize(std::mt19937_64& rng) {
  GlorotUniform(weight_.value, in_features_, out_features_, rng);
  bias_.value.Fill(Real(0));
}

// ---------------------------------------------------------------------------

template <typename Real>
Sequential<Real>::Sequential(const Sequential& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->Clone());
}

template <typename Real>
Sequential<Real>& Sequential<Real>::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename Real>
Tensor<Real> Sequential<Real>::Forward(const Tensor<Real>& x, const Context& ctx) {
  Tensor<Real> h = x;
  for (auto& l : layers_) h = l->Forward(h, ctx);
  return h;
}

template <typename Real>
Tensor<Real> Sequential<Real>::Backward(const Tensor<Real>& dy) {
  Tensor<Real> g = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->Backward(g);
  return g;
}

template <typename Real>
void Sequential<Real>::Initialize(std::mt19937_64& rng) {
  for (auto& l : layers_) l->Initialize(rng);
}

template <typename Real>
void Sequential<Real>::CollectParameters(std::vector<Parameter<Real>*>& out) {
  for (auto& l : layers_) l->CollectParameters(out);
}

template <typename Real>
void Sequential<Real>::CollectBuffers(std::vector<Buffer<Real>*>& out) {
  for (auto& l : layers_) l->CollectBuffers(out);
}

// ---------------------------------------------------------------------------

template <typename Real>
double BceWithLogits(const Tensor<Real>& logits, std::span<const float> targets,
                     Tensor<Real>* grad) {
  const int n = logits.n();
  if (static_cast<int>(targets.size()) != n || logits.stride() != 1)
    throw DataError("loss: logits/targets size mismatch");
  if (grad != nullptr) *grad = Tensor<Real>(n, 1);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = logits.data[i];
    const double y = targets[i];
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    if (grad != nullptr)
      grad->data[i] = static_cast<Real>((Sigmoid(z) - y) / n);
  }
  return total / n;
}

#define SUBCM_INSTANTIATE(Real)                                              \
  template class Conv3x3<Real>;                                              \
  template class BatchNorm<Real>;                                            \
  template class Relu<Real>;                                                 \
  template class MaxPool2x2<Real>;                                           \
  template class GlobalAvgPool<Real>;                                        \
  template class Dropout<Real>;                                              \
  template class Linear<Real>;                                               \
  template class Sequential<Real>;                                           \
  template double BceWithLogits<Real>(const Tensor<Real>&,                   \
                                      std::span<const float>, Tensor<Real>*);

SUBCM_INSTANTIATE(float)
SUBCM_INSTANTIATE(double)
#undef SUBCM_INSTANTIATE

}  // namespace subcm::nn
