// subcm/subband.cpp

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

#include "subcm/subband.hpp"

#include <algorithm>
#include <sstream>

namespace subcm {

SubbandPlan SubbandPlan::Make(int n) {
  if (n != 1 && n != 2 && n != 4 && n != 8)
    throw ConfigError("unsupported number of subbands " + std::to_string(n) +
                      " (expected 1, 2, 4 or 8)");
  SubbandPlan plan;
  const int base = kNumBins / n;
  int offset = 0;
  for (int i = 0; i < n; ++i) {
    const int width = (i + 1 == n) ? kNumBins - offset : base;
    plan.widths_.push_back(width);
    plan.offsets_.push_back(offset);
    offset += width;
  }
  return plan;
}

int SubbandPlan::BandOfBin(int bin) const {
  if (bin < 0 || bin >= kNumBins)
    throw ConfigError("bin " + std::to_string(bin) + " out of range");
  for (int i = n() - 1; i >= 0; --i)
    if (bin >= offsets_[i]) return i;
  return 0;
}

std::string SubbandPlan::BandLabel(int band) const {
  if (band < 0 || band >= n())
    throw ConfigError("band " + std::to_string(band) + " out of range");
  std::ostringstream os;
  const double step = 8.0 / n();
  os << step * band << "-" << step * (band + 1);
  return os.str();
}

std::vector<SubSpectrogram> Split(const Spectrogram& spec,
                                  const SubbandPlan& plan) {
  if (spec.frames() != kNumFrames || spec.bins() != kNumBins)
    throw DataError("split expects a 300x257 spectrogram, got " +
                    std::to_string(spec.frames()) + "x" +
                    std::to_string(spec.bins()));
  std::vector<SubSpectrogram> bands;
  bands.reserve(plan.n());
  for (int i = 0; i < plan.n(); ++i) {
    SubSpectrogram band;
    band.values = spec.values.middleCols(plan.offset(i), plan.width(i));
    band.band_index = i;
    band.plan_n = plan.n();
    bands.push_back(std::move(band));
  }
  return bands;
}

std::vector<int> NormalizeBandSubset(const SubbandPlan& plan,
                                     std::span<const int> indices) {
  std::vector<int> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) throw ConfigError("empty band subset");
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= plan.n())
      throw ConfigError("band index " + std::to_string(sorted[i]) +
                        " out of range for n=" + std::to_string(plan.n()));
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw ConfigError("duplicate band index " + std::to_string(sorted[i]));
  }
  return sorted;
}

std::vector<SubSpectrogram> SelectBands(std::span<const SubSpectrogram> bands,
                                        std::span<const int> indices) {
  if (bands.empty()) throw ConfigError("no bands to select from");
  const int n = bands.front().plan_n;
  if (static_cast<int>(bands.size()) != n)
    throw ConfigError("band list does not cover its plan");
  std::vector<int> sorted = NormalizeBandSubset(SubbandPlan::Make(n), indices);
  std::vector<SubSpectrogram> out;
  out.reserve(sorted.size());
  for (int i : sorted) out.push_back(bands[i]);
  return out;
}

}  // namespace subcm
