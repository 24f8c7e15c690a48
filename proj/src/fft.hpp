// subcm/fft.hpp

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

#ifndef SUBCM_SRC_FFT_HPP_
#define SUBCM_SRC_FFT_HPP_

#include <complex>
#include <span>
#include <vector>

namespace subcm::internal {

/// Batched real-to-complex and complex-to-real transforms of one length,
/// backed by FFTW with estimate-mode plans (deterministic across runs).
/// Plan creation is serialized internally; each instance owns its buffers
/// and must not be shared between threads.
class RealFft {
 public:
  RealFft(int length, int batch = 1);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int length() const { return length_; }
  int batch() const { return batch_; }
  int bins() const { return length_ / 2 + 1; }

  /// batch * length real inputs, row after row.
  std::span<double> time() { return {time_, std::size_t(length_) * batch_}; }
  /// batch * bins() complex outputs.
  std::span<std::complex<double>> freq() {
    return {reinterpret_cast<std::complex<double>*>(freq_),
            std::size_t(bins()) * batch_};
  }

  void Forward();
  /// Unnormalized inverse: Inverse(Forward(x)) == length * x.
  void Inverse();

 private:
  int length_;
  int batch_;
  double* time_ = nullptr;
  void* freq_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Multiplies the spectrum of `signal` by `gain(frequency_hz)` and returns the
/// filtered signal (whole-signal FFT, zero-phase).
template <typename GainFn>
std::vector<double> FilterSpectrum(std::span<const double> signal,
                                   double sample_rate, GainFn gain) {
  const int n = static_cast<int>(signal.size());
  RealFft fft(n);
  std::copy(signal.begin(), signal.end(), fft.time().begin());
  fft.Forward();
  auto spec = fft.freq();
  for (int k = 0; k < fft.bins(); ++k)
    spec[k] *= gain(k * sample_rate / n);
  fft.Inverse();
  std::vector<double> out(fft.time().begin(), fft.time().end());
  for (double& v : out) v /= n;
  return out;
}

}  // namespace subcm::internal

#endif  // SUBCM_SRC_FFT_HPP_
