// subcm/subband.hpp

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

#ifndef SUBCM_SUBBAND_HPP_
#define SUBCM_SUBBAND_HPP_

#include <span>
#include <string>
#include <vector>

#include "subcm/frontend.hpp"

namespace subcm {

/// Uniform partition of the 257 FFT bins into n contiguous bands. Every band
/// is floor(257 / n) bins wide except the last, which takes the leftover.
class SubbandPlan {
 public:
  /// n must be one of 1, 2, 4, 8; anything else throws ConfigError.
  static SubbandPlan Make(int n);

  int n() const { return static_cast<int>(widths_.size()); }
  const std::vector<int>& widths() const { return widths_; }
  const std::vector<int>& offsets() const { return offsets_; }
  int width(int band) const { return widths_.at(band); }
  int offset(int band) const { return offsets_.at(band); }

  /// Band that owns FFT bin `bin`.
  int BandOfBin(int bin) const;

  /// Nominal frequency range, e.g. "7-8" for band 7 of n=8 (kHz).
  std::string BandLabel(int band) const;

  bool operator==(const SubbandPlan&) const = default;

 private:
  std::vector<int> widths_;
  std::vector<int> offsets_;
};

struct SubSpectrogram {
  FeatureMatrix values;  // frames x width
  int band_index = 0;
  int plan_n = 1;

  int width() const { return static_cast<int>(values.cols()); }
};

/// Cuts a 300 x 257 spectrogram into plan.n() column slices in ascending
/// frequency order. Throws DataError on a shape mismatch.
std::vector<SubSpectrogram> Split(const Spectrogram& spec,
                                  const SubbandPlan& plan);

/// Keeps the bands at `indices` (distinct, in range), returned in ascending
/// frequency order.
std::vector<SubSpectrogram> SelectBands(std::span<const SubSpectrogram> bands,
                                        std::span<const int> indices);

/// Validates a band subset against a plan and returns it sorted.
std::vector<int> NormalizeBandSubset(const SubbandPlan& plan,
                                     std::span<const int> indices);

}  // namespace subcm

#endif  // SUBCM_SUBBAND_HPP_
