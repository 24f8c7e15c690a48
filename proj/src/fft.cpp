// subcm/fft.cpp

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

#include "fft.hpp"

#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace subcm::internal {
namespace {
std::mutex& PlannerMutex() {
  static std::mutex mutex;
  return mutex;
}
}  // namespace

RealFft::RealFft(int length, int batch) : length_(length), batch_(batch) {
  if (length <= 0 || batch <= 0) throw std::invalid_argument("bad FFT size");
  const int nbins = bins();
  std::lock_guard<std::mutex> lock(PlannerMutex());
  time_ = fftw_alloc_real(std::size_t(length) * batch);
  auto* freq = fftw_alloc_complex(std::size_t(nbins) * batch);
  freq_ = freq;
  int n[] = {length};
  forward_plan_ = fftw_plan_many_dft_r2c(1, n, batch, time_, nullptr, 1,
                                         length, freq, nullptr, 1, nbins,
                                         FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_many_dft_c2r(1, n, batch, freq, nullptr, 1, nbins,
                                         time_, nullptr, 1, length,
                                         FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(time_);
  fftw_free(freq_);
}

void RealFft::Forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }

// c2r destroys its input; callers only read time() afterwards.
void RealFft::Inverse() { fftw_execute(static_cast<fftw_plan>(inverse_plan_)); }

}  // namespace subcm::internal
