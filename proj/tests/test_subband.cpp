// tests/test_subband.cpp

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

#include <numeric>
#include <random>

#include <doctest.h>

#include "subcm/subband.hpp"

using namespace subcm;

namespace {

Spectrogram Ramp() {
  Spectrogram s;
  s.values.resize(kNumFrames, kNumBins);
  for (int t = 0; t < kNumFrames; ++t)
    for (int k = 0; k < kNumBins; ++k) s.values(t, k) = float(t * 1000 + k);
  return s;
}

}  // namespace

TEST_CASE("plan widths and offsets") {
  CHECK(SubbandPlan::Make(1).widths() == std::vector<int>{257});
  CHECK(SubbandPlan::Make(2).widths() == std::vector<int>{128, 129});
  CHECK(SubbandPlan::Make(4).widths() == std::vector<int>{64, 64, 64, 65});
  CHECK(SubbandPlan::Make(8).widths() ==
        std::vector<int>{32, 32, 32, 32, 32, 32, 32, 33});
  CHECK(SubbandPlan::Make(8).offsets() ==
        std::vector<int>{0, 32, 64, 96, 128, 160, 192, 224});
  for (int n : {1, 2, 4, 8}) {
    const SubbandPlan p = SubbandPlan::Make(n);
    CHECK(std::accumulate(p.widths().begin(), p.widths().end(), 0) == 257);
    for (int b = 0; b < n; ++b) {
      CHECK(p.BandOfBin(p.offset(b)) == b);
      CHECK(p.BandOfBin(p.offset(b) + p.width(b) - 1) == b);
    }
  }
  for (int n : {0, 3, 5, 16}) CHECK_THROWS_AS(SubbandPlan::Make(n), ConfigError);
}

TEST_CASE("band labels in kHz") {
  const SubbandPlan p8 = SubbandPlan::Make(8);
  CHECK(p8.BandLabel(0) == "0-1");
  CHECK(p8.BandLabel(7) == "7-8");
  CHECK(SubbandPlan::Make(4).BandLabel(1) == "2-4");
  CHECK(SubbandPlan::Make(1).BandLabel(0) == "0-8");
}

TEST_CASE("split covers every bin once and concatenates back") {
  const Spectrogram s = Ramp();
  for (int n : {1, 2, 4, 8}) {
    const auto bands = Split(s, SubbandPlan::Make(n));
    REQUIRE(int(bands.size()) == n);
    FeatureMatrix joined(kNumFrames, kNumBins);
    int col = 0;
    for (const auto& b : bands) {
      CHECK(b.plan_n == n);
      CHECK(b.values.rows() == kNumFrames);
      joined.middleCols(col, b.width()) = b.values;
      col += b.width();
    }
    CHECK(col == kNumBins);
    CHECK(joined == s.values);
  }
  const auto b8 = Split(s, SubbandPlan::Make(8));
  CHECK(b8[7].width() == 33);
  CHECK(b8[7].values(0, 0) == 224.0f);
  CHECK(b8[7].values(0, 32) == 256.0f);
}

TEST_CASE("split rejects malformed spectrograms") {
  Spectrogram s;
  s.values.resize(299, kNumBins);
  CHECK_THROWS_AS(Split(s, SubbandPlan::Make(2)), DataError);
}

TEST_CASE("select bands") {
  const auto bands = Split(Ramp(), SubbandPlan::Make(8));
  const std::vector<int> ends{0, 7};
  const auto sel = SelectBands(bands, ends);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0].band_index == 0);
  CHECK(sel[1].band_index == 7);
  const std::vector<int> shuffled{7, 0};
  CHECK(SelectBands(bands, shuffled)[0].band_index == 0);
  const std::vector<int> bad{8};
  CHECK_THROWS_AS(SelectBands(bands, bad), ConfigError);
  const std::vector<int> dup{3, 3};
  CHECK_THROWS_AS(SelectBands(bands, dup), ConfigError);
  const std::vector<int> none;
  CHECK_THROWS_AS(SelectBands(bands, none), ConfigError);
}
