// tests/test_frontend.cpp

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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "subcm/frontend.hpp"
#include "subcm/hash.hpp"
#include "test_util.hpp"

using namespace subcm;

namespace {

Waveform Wave(std::vector<float> samples, std::string id = "utt") {
  Waveform w;
  w.samples = std::move(samples);
  w.utterance_id = std::move(id);
  return w;
}

// Minimal RIFF writer, independent of WriteWaveform.
std::string PcmFile(const std::vector<std::int16_t>& pcm, int rate, int channels) {
  std::string out;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](std::uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char(v >> 8));
  };
  const std::uint32_t bytes = std::uint32_t(pcm.size() * 2);
  out += "RIFF";
  u32(36 + bytes);
  out += "WAVEfmt ";
  u32(16);
  u16(1);
  u16(std::uint16_t(channels));
  u32(std::uint32_t(rate));
  u32(std::uint32_t(rate * 2 * channels));
  u16(std::uint16_t(2 * channels));
  u16(16);
  out += "data";
  u32(bytes);
  for (auto s : pcm) u16(std::uint16_t(s));
  return out;
}

std::vector<float> Sine(double hz, int n, double amp = 0.5, double phase = 0.0) {
  std::vector<float> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    x[std::size_t(i)] =
        float(amp * std::sin(2 * std::numbers::pi * hz * i / kSampleRate + phase));
  return x;
}

}  // namespace

TEST_CASE("silence file decodes to zeros") {
  testing::TempDir dir;
  WriteFileBytes(dir / "s.wav", PcmFile(std::vector<std::int16_t>(16000, 0), 16000, 1));
  const Waveform w = LoadWaveform(dir / "s.wav");
  CHECK(w.samples.size() == 16000);
  CHECK(std::all_of(w.samples.begin(), w.samples.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("pcm decoding is exact and round trips bit for bit") {
  testing::TempDir dir;
  std::vector<std::int16_t> pcm;
  for (int i = 0; i < 400; ++i) pcm.push_back(i % 2 ? 32767 : -32768);
  for (int i = -300; i < 300; ++i) pcm.push_back(std::int16_t(i * 97));
  const std::string bytes = PcmFile(pcm, 16000, 1);
  WriteFileBytes(dir / "a.wav", bytes);
  const Waveform w = LoadWaveform(dir / "a.wav");
  REQUIRE(w.samples.size() == pcm.size());
  CHECK(w.samples[1] == float(32767.0 / 32768.0));  // full scale positive = 1 - 2^-15
  CHECK(w.samples[0] == -1.0f);
  for (std::size_t i = 0; i < pcm.size(); ++i) CHECK(w.samples[i] == float(pcm[i] / 32768.0));
  WriteWaveform(w, dir / "b.wav");
  CHECK(ReadFileBytes(dir / "b.wav") == bytes);
}

TEST_CASE("unsupported audio is rejected") {
  testing::TempDir dir;
  WriteFileBytes(dir / "8k.wav", PcmFile(std::vector<std::int16_t>(800, 1), 8000, 1));
  CHECK_THROWS_WITH_AS(LoadWaveform(dir / "8k.wav"),
                       doctest::Contains("unsupported sample rate"), DataError);
  WriteFileBytes(dir / "st.wav", PcmFile(std::vector<std::int16_t>(800, 1), 16000, 2));
  CHECK_THROWS_AS(LoadWaveform(dir / "st.wav"), DataError);
  CHECK_THROWS_AS(LoadWaveform(dir / "missing.wav"), DataError);
  WriteFileBytes(dir / "junk.wav", "not a wave file");
  CHECK_THROWS_AS(LoadWaveform(dir / "junk.wav"), DataError);
}

TEST_CASE("trim zeros") {
  CHECK(TrimZeros(Wave({0, 0, 0.5f, 0, -0.5f, 0})).samples == std::vector<float>{0.5f, 0, -0.5f});
  const Waveform w = Wave({0.1f, 0, 0.2f});
  CHECK(TrimZeros(w).samples == w.samples);
  CHECK_THROWS_WITH_AS(TrimZeros(Wave({0, 0, 0})), doctest::Contains("empty after trim"),
                       DataError);
  const Waveform once = TrimZeros(Wave({0, 1, 0, 2, 0}));
  CHECK(TrimZeros(once).samples == once.samples);
}

TEST_CASE("trim by annotation") {
  const Waveform w = Wave(std::vector<float>(48000, 0.25f));
  CHECK(TrimAnnotated(w, {"utt", 1000, 47000}).samples.size() == 46000);
  CHECK(TrimAnnotated(w, {"utt", 0, 48000}).samples == w.samples);
  CHECK_THROWS_AS(TrimAnnotated(w, {"utt", 0, 48001}), DataError);

  AnnotationTable table;
  table.Add({"utt", 10, 20});
  CHECK(table.Apply(w).samples.size() == 10);
  const Waveform other = Wave(std::vector<float>(100, 0.5f), "other");
  CHECK_THROWS_AS(table.Apply(other), DataError);
  CHECK(table.Apply(other, AnnotationTable::MissingPolicy::kPassThrough).samples.size() == 100);
}

TEST_CASE("annotation file parsing") {
  testing::TempDir dir;
  WriteFileBytes(dir / "a.txt", "# comment\nu1\t100\t2000\nu2\t0\t16000\n");
  const AnnotationTable t = AnnotationTable::Load(dir / "a.txt");
  CHECK(t.size() == 2);
  REQUIRE(t.Find("u1") != nullptr);
  CHECK(t.Find("u1")->end_sample == 2000);
  WriteFileBytes(dir / "b.txt", "u1\t100\n");
  CHECK_THROWS_AS(AnnotationTable::Load(dir / "b.txt"), DataError);
}

TEST_CASE("standardize duration") {
  std::vector<float> x(16000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = float(i) / 16000.0f;
  const Waveform tiled = StandardizeDuration(Wave(x));
  REQUIRE(tiled.samples.size() == 48000);
  for (std::size_t i = 0; i < 48000; ++i) CHECK(tiled.samples[i] == x[i % 16000]);

  std::vector<float> y(100000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = float(i % 777);
  const Waveform cut = StandardizeDuration(Wave(y));
  CHECK(cut.samples == std::vector<float>(y.begin(), y.begin() + 48000));

  const Waveform exact = Wave(std::vector<float>(y.begin(), y.begin() + 48000));
  CHECK(StandardizeDuration(exact).samples == exact.samples);
  CHECK(StandardizeDuration(StandardizeDuration(exact)).samples == exact.samples);
}

TEST_CASE("spectrogram shape, silence and sine peak") {
  const Spectrogram zero = LogPowerSpectrogram(Wave(std::vector<float>(48000, 0.0f)));
  CHECK(zero.frames() == 300);
  CHECK(zero.bins() == 257);
  const float floor = float(std::log(1e-10));
  for (int t = 0; t < 300; ++t)
    for (int k = 0; k < 257; ++k) REQUIRE(zero.values(t, k) == floor);

  const Spectrogram s = LogPowerSpectrogram(Wave(Sine(1000.0, 48000, 0.5, std::numbers::pi / 2)));
  for (int t = 0; t < 300; ++t) {
    Eigen::Index arg;
    s.values.row(t).maxCoeff(&arg);
    INFO("frame " << t);
    REQUIRE(arg == 32);
  }
  CHECK_THROWS_AS(LogPowerSpectrogram(Wave(std::vector<float>(1000, 0.0f))), DataError);
}

TEST_CASE("spectrogram agrees with a direct DFT") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<float> x(48000);
  for (auto& v : x) v = float(u(rng));
  const Spectrogram s = LogPowerSpectrogram(Wave(x));
  const std::vector<double> xd(x.begin(), x.end());
  for (int frame : {0, 1, 150, 298, 299}) {
    const auto ref = oracle::LogPowerFrame(xd, frame);
    for (int k = 0; k < 257; ++k) REQUIRE(s.values(frame, k) == doctest::Approx(ref[k]).epsilon(1e-4));
  }
}

TEST_CASE("mvn statistics, constant bins and idempotence") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 3.0);
  Spectrogram s;
  s.values.resize(300, 257);
  for (int t = 0; t < 300; ++t)
    for (int k = 0; k < 257; ++k) s.values(t, k) = k == 5 ? 2.5f : float(n(rng) + k);
  const Spectrogram m = MvnNormalize(s);
  for (int k = 0; k < 257; ++k) {
    double mean = 0, var = 0;
    for (int t = 0; t < 300; ++t) mean += m.values(t, k);
    mean /= 300;
    for (int t = 0; t < 300; ++t) var += (m.values(t, k) - mean) * (m.values(t, k) - mean);
    var /= 300;
    if (k == 5) {
      CHECK(m.values.col(k).isZero(0.0));
    } else {
      REQUIRE(std::abs(mean) <= 1e-5);
      REQUIRE(std::abs(var - 1.0) <= 1e-4);
    }
  }
  const Spectrogram twice = MvnNormalize(m);
  CHECK((twice.values - m.values).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("feature extraction is deterministic and always 300x257") {
  std::vector<float> x = Sine(440.0, 20000);
  x.insert(x.begin(), 500, 0.0f);
  x.insert(x.end(), 300, 0.0f);
  const FrontendConfig cfg;
  const Spectrogram a = ExtractFeatures(Wave(x), cfg);
  const Spectrogram b = ExtractFeatures(Wave(x), cfg);
  CHECK(a.frames() == 300);
  CHECK(a.bins() == 257);
  CHECK(a.values == b.values);
  for (int len : {1600, 47999, 48000, 90000}) {
    const Spectrogram c = ExtractFeatures(Wave(Sine(300.0, len)), cfg);
    CHECK(c.frames() == 300);
    CHECK(c.bins() == 257);
  }
  FrontendConfig annotated;
  annotated.trim_mode = TrimMode::kAnnotation;
  CHECK_THROWS_AS(ExtractFeatures(Wave(x), annotated), ConfigError);
}
