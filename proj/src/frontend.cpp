// subcm/frontend.cpp

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

#include "subcm/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "fft.hpp"

namespace subcm {
namespace {

std::uint32_t ReadU32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t ReadU16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}
void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char(v >> 8));
}

const std::vector<double>& HammingWindow() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kFftSize);
    for (int i = 0; i < kFftSize; ++i)
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (kFftSize - 1));
    return w;
  }();
  return window;
}

}  // namespace

Waveform LoadWaveform(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError("not a RIFF/WAVE file" + where);

  bool have_fmt = false;
  int channels = 0, sample_rate = 0, bits = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::size_t size = ReadU32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a truncated final data chunk (streaming writers).
      if (std::memcmp(chunk, "data", 4) != 0)
        throw DataError("truncated chunk" + where);
      size = bytes.size() - body;
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw DataError("short fmt chunk" + where);
      int format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      sample_rate = static_cast<int>(ReadU32(chunk + 12));
      bits = ReadU16(chunk + 22);
      if (format == 0xFFFE && size >= 40) format = ReadU16(chunk + 32);
      if (format != 1) throw DataError("not PCM audio" + where);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || data == nullptr)
    throw DataError("missing fmt or data chunk" + where);
  if (channels != 1)
    throw DataError("multichannel audio not supported (" +
                    std::to_string(channels) + " channels)" + where);
  if (sample_rate != kSampleRate)
    throw DataError("unsupported sample rate " + std::to_string(sample_rate) +
                    where);
  if (bits != 16)
    throw DataError("unsupported sample width " + std::to_string(bits) + where);

  Waveform wave;
  wave.sample_rate = sample_rate;
  wave.utterance_id = path.stem().string();
  wave.samples.resize(data_size / 2);
  for (std::size_t i = 0; i < wave.samples.size(); ++i) {
    auto v = static_cast<std::int16_t>(ReadU16(data + 2 * i));
    wave.samples[i] = static_cast<float>(v) / 32768.0f;
  }
  return wave;
}

void WriteWaveform(const Waveform& wave, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::string out;
  out.reserve(44 + 2 * std::size_t(n));
  out += "RIFF";
  PutU32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out += "data";
  PutU32(out, 2 * n);
  for (float s : wave.samples) {
    double q = std::nearbyint(double(s) * 32768.0);
    q = std::clamp(q, -32768.0, 32767.0);
    PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw DataError("write failed for " + path.string());
}

std::string TrimModeName(TrimMode mode) {
  switch (mode) {
    case TrimMode::kNone: return "none";
    case TrimMode::kZeros: return "zeros";
    case TrimMode::kAnnotation: return "annotation";
  }
  return "none";
}

TrimMode ParseTrimMode(const std::string& name) {
  if (name == "none") return TrimMode::kNone;
  if (name == "zeros") return TrimMode::kZeros;
  if (name == "annotation") return TrimMode::kAnnotation;
  throw ConfigError("unknown trim mode '" + name + "'");
}

Waveform TrimZeros(const Waveform& wave) {
  const auto& s = wave.samples;
  auto first = std::find_if(s.begin(), s.end(), [](float v) { return v != 0.0f; });
  if (first == s.end())
    throw DataError("empty after trim: " + wave.utterance_id);
  auto last = std::find_if(s.rbegin(), s.rend(), [](float v) { return v != 0.0f; });
  Waveform out{std::vector<float>(first, last.base()), wave.sample_rate,
               wave.utterance_id};
  return out;
}

Waveform TrimAnnotated(const Waveform& wave, const TrimAnnotation& annotation) {
  if (annotation.utterance_id != wave.utterance_id)
    throw DataError("annotation for '" + annotation.utterance_id +
                    "' applied to '" + wave.utterance_id + "'");
  const auto len = static_cast<std::int64_t>(wave.samples.size());
  if (annotation.start_sample < 0 ||
      annotation.end_sample <= annotation.start_sample ||
      annotation.end_sample > len)
    throw DataError("annotation [" + std::to_string(annotation.start_sample) +
                    ", " + std::to_string(annotation.end_sample) +
                    ") out of range for " + wave.utterance_id + " (" +
                    std::to_string(len) + " samples)");
  return Waveform{std::vector<float>(wave.samples.begin() + annotation.start_sample,
                                     wave.samples.begin() + annotation.end_sample),
                  wave.sample_rate, wave.utterance_id};
}

AnnotationTable AnnotationTable::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file " + path.string());
  AnnotationTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    TrimAnnotation a;
    std::string extra;
    if (!(fields >> a.utterance_id >> a.start_sample >> a.end_sample) ||
        (fields >> extra))
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed annotation line");
    if (a.start_sample < 0 || a.end_sample <= a.start_sample)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": empty or negative interval");
    table.Add(a);
  }
  return table;
}

void AnnotationTable::Add(const TrimAnnotation& annotation) {
  if (!table_.emplace(annotation.utterance_id, annotation).second)
    throw DataError("duplicate annotation for " + annotation.utterance_id);
}

const TrimAnnotation* AnnotationTable::Find(const std::string& id) const {
  auto it = table_.find(id);
  return it == table_.end() ? nullptr : &it->second;
}

Waveform AnnotationTable::Apply(const Waveform& wave,
                                MissingPolicy policy) const {
  if (const TrimAnnotation* a = Find(wave.utterance_id))
    return TrimAnnotated(wave, *a);
  if (policy == MissingPolicy::kPassThrough) return wave;
  throw DataError("no trim annotation for " + wave.utterance_id);
}

Waveform StandardizeDuration(const Waveform& wave, int target_samples) {
  if (wave.samples.empty())
    throw DataError("cannot standardize empty waveform " + wave.utterance_id);
  Waveform out{{}, wave.sample_rate, wave.utterance_id};
  out.samples.reserve(target_samples);
  while (static_cast<int>(out.samples.size()) < target_samples) {
    const std::size_t take = std::min(wave.samples.size(),
                                      target_samples - out.samples.size());
    out.samples.insert(out.samples.end(), wave.samples.begin(),
                       wave.samples.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

Spectrogram LogPowerSpectrogram(const Waveform& wave) {
  if (wave.sample_rate != kSampleRate ||
      static_cast<int>(wave.samples.size()) != kStandardSamples)
    throw DataError("spectrogram expects 48000 samples at 16 kHz, got " +
                    std::to_string(wave.samples.size()) + " for " +
                    wave.utterance_id);
  constexpr int kPad = kFftSize / 2;
  const int n = kStandardSamples;
  // Reflect padding without edge repetition: x[-k] = x[k].
  std::vector<double> padded(n + 2 * kPad);
  for (int i = 0; i < n; ++i) padded[kPad + i] = wave.samples[i];
  for (int k = 1; k <= kPad; ++k) {
    padded[kPad - k] = wave.samples[k];
    padded[kPad + n - 1 + k] = wave.samples[n - 1 - k];
  }

  const auto& window = HammingWindow();
  internal::RealFft fft(kFftSize, kNumFrames);
  auto frames = fft.time();
  for (int t = 0; t < kNumFrames; ++t)
    for (int i = 0; i < kFftSize; ++i)
      frames[std::size_t(t) * kFftSize + i] = padded[t * kHopSize + i] * window[i];
  fft.Forward();
  auto spec = fft.freq();

  Spectrogram out;
  out.utterance_id = wave.utterance_id;
  out.values.resize(kNumFrames, kNumBins);
  for (int t = 0; t < kNumFrames; ++t)
    for (int k = 0; k < kNumBins; ++k)
      out.values(t, k) = static_cast<float>(
          std::log(std::norm(spec[std::size_t(t) * kNumBins + k]) + kLogFloor));
  return out;
}

Spectrogram MvnNormalize(const Spectrogram& spec) {
  const int frames = spec.frames();
  if (frames < 2)
    throw DataError("normalization needs at least 2 frames");
  Spectrogram out;
  out.utterance_id = spec.utterance_id;
  out.values.resize(frames, spec.bins());
  for (int k = 0; k < spec.bins(); ++k) {
    double mean = 0.0;
    for (int t = 0; t < frames; ++t) mean += spec.values(t, k);
    mean /= frames;
    double var = 0.0;
    for (int t = 0; t < frames; ++t) {
      const double d = spec.values(t, k) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / frames);
    for (int t = 0; t < frames; ++t)
      out.values(t, k) =
          sd > 1e-12 ? static_cast<float>((spec.values(t, k) - mean) / sd) : 0.0f;
  }
  return out;
}

std::string FrontendConfig::ToString() const {
  std::ostringstream os;
  os << "sr=" << kSampleRate << ";fft=" << kFftSize << ";hop=" << kHopSize
     << ";window=hamming" << kFftSize << ";frames=" << kNumFrames
     << ";pad=reflect" << kFftSize / 2 << ";floor=1e-10;mvn=utterance"
     << ";trim=" << TrimModeName(trim_mode);
  return os.str();
}

Spectrogram ExtractFeatures(const Waveform& wave, const FrontendConfig& config,
                            const AnnotationTable* annotations) {
  Waveform trimmed;
  switch (config.trim_mode) {
    case TrimMode::kNone:
      trimmed = wave;
      break;
    case TrimMode::kZeros:
      trimmed = TrimZeros(wave);
      break;
    case TrimMode::kAnnotation:
      if (annotations == nullptr)
        throw ConfigError("annotation trim mode without annotation table");
      trimmed = annotations->Apply(wave, config.missing_annotation);
      break;
  }
  return MvnNormalize(LogPowerSpectrogram(StandardizeDuration(trimmed)));
}

}  // namespace subcm
