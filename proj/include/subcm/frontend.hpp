// subcm/frontend.hpp

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

#ifndef SUBCM_FRONTEND_HPP_
#define SUBCM_FRONTEND_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subcm/common.hpp"

namespace subcm {

inline constexpr int kSampleRate = 16000;
inline constexpr int kFftSize = 512;
inline constexpr int kHopSize = 160;
inline constexpr int kNumBins = kFftSize / 2 + 1;        // 257
inline constexpr int kStandardSamples = 3 * kSampleRate;  // 48000
inline constexpr int kNumFrames = kStandardSamples / kHopSize;  // 300
inline constexpr double kLogFloor = 1e-10;

/// frames x bins, row-major so each frame is contiguous.
using FeatureMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Waveform {
  std::vector<float> samples;  // in [-1, 1]
  int sample_rate = kSampleRate;
  std::string utterance_id;
};

/// Speech endpoints of one utterance, half-open sample interval.
struct TrimAnnotation {
  std::string utterance_id;
  std::int64_t start_sample = 0;
  std::int64_t end_sample = 0;
};

struct Spectrogram {
  FeatureMatrix values;  // kNumFrames x kNumBins for the full band
  std::string utterance_id;

  int frames() const { return static_cast<int>(values.rows()); }
  int bins() const { return static_cast<int>(values.cols()); }
};

// ---------------------------------------------------------------------------
// RIFF/WAVE I/O. Only mono 16-bit PCM at 16 kHz is accepted on read.

/// Decodes `path`; utterance_id is the file stem. Throws DataError on
/// unreadable or malformed files, on a sample rate other than 16 kHz
/// ("unsupported sample rate") and on multichannel input.
Waveform LoadWaveform(const std::filesystem::path& path);

/// Encodes samples as mono 16-bit PCM, rounding to nearest and clipping to
/// the int16 range.
void WriteWaveform(const Waveform& wave, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Trimming.

enum class TrimMode { kNone, kZeros, kAnnotation };
std::string TrimModeName(TrimMode mode);
TrimMode ParseTrimMode(const std::string& name);

/// Removes samples exactly equal to zero from both ends. Interior zeros are
/// kept. Throws DataError("empty after trim") on an all-zero waveform.
Waveform TrimZeros(const Waveform& wave);

/// Returns samples [start_sample, end_sample).
Waveform TrimAnnotated(const Waveform& wave, const TrimAnnotation& annotation);

/// utterance_id -> annotation, read from "id<TAB>start<TAB>end" lines.
class AnnotationTable {
 public:
  enum class MissingPolicy { kError, kPassThrough };

  static AnnotationTable Load(const std::filesystem::path& path);

  void Add(const TrimAnnotation& annotation);
  const TrimAnnotation* Find(const std::string& utterance_id) const;
  std::size_t size() const { return table_.size(); }

  /// Trims `wave` with its annotation; a missing annotation either throws
  /// DataError or returns the input unchanged, per `policy`.
  Waveform Apply(const Waveform& wave,
                 MissingPolicy policy = MissingPolicy::kError) const;

 private:
  std::map<std::string, TrimAnnotation> table_;
};

// ---------------------------------------------------------------------------
// Representation.

/// Tiles a short waveform end-to-end (final copy truncated) or keeps the
/// first `target_samples` of a long one.
Waveform StandardizeDuration(const Waveform& wave,
                             int target_samples = kStandardSamples);

/// log(|STFT|^2 + 1e-10) with a 512-point Hamming window and a hop of 160,
/// centered framing (reflect padding of 256 at both ends). The input must
/// hold exactly 48000 samples; the result is 300 x 257.
Spectrogram LogPowerSpectrogram(const Waveform& wave);

/// Per-bin mean/variance normalization across frames. Bins whose standard
/// deviation is <= 1e-12 become all zeros.
Spectrogram MvnNormalize(const Spectrogram& spec);

/// Front-end parameters that change the model input. Serialized into
/// checkpoint and corpus manifests; ToString() is the compatibility key.
struct FrontendConfig {
  TrimMode trim_mode = TrimMode::kZeros;
  AnnotationTable::MissingPolicy missing_annotation =
      AnnotationTable::MissingPolicy::kError;

  std::string ToString() const;
};

/// Trim (per config) -> standardize -> spectrogram -> normalize.
/// `annotations` is required when the trim mode is kAnnotation.
Spectrogram ExtractFeatures(const Waveform& wave, const FrontendConfig& config,
                            const AnnotationTable* annotations = nullptr);

}  // namespace subcm

#endif  // SUBCM_FRONTEND_HPP_
