// subcm/corpus.hpp

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

#ifndef SUBCM_CORPUS_HPP_
#define SUBCM_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subcm/frontend.hpp"
#include "subcm/training.hpp"

namespace subcm {

enum class Partition { kTrain, kDev, kEval };
std::string PartitionName(Partition p);
Partition ParsePartition(const std::string& name);

struct ProtocolEntry {
  std::string utterance_id;
  Label label = Label::kBonafide;
  Partition partition = Partition::kTrain;
  std::map<std::string, std::string> attributes;

  bool operator==(const ProtocolEntry&) const = default;
};

enum class ProtocolFormat { kCanonical, kV2017, kV2019Pa };
std::string ProtocolFormatName(ProtocolFormat f);
ProtocolFormat ParseProtocolFormat(const std::string& name);

/// Column layout of a protocol file. Columns are whitespace separated and
/// addressed by position; only the id and label are interpreted, the rest
/// is kept as opaque attributes.
struct ProtocolProfile {
  int id_column = 0;
  int label_column = 1;
  int min_columns = 2;
  int max_columns = 2;  // 0: unlimited
  std::vector<std::string> attribute_names;  // by column, "" to skip
  std::map<std::string, Label> label_tokens{{"bonafide", Label::kBonafide},
                                            {"spoof", Label::kSpoof}};
  bool strip_wav_extension = false;

  static ProtocolProfile For(ProtocolFormat format);
};

/// Errors name the file and line: malformed lines, duplicate ids and unknown
/// label tokens are DataErrors.
std::vector<ProtocolEntry> ParseProtocol(const std::filesystem::path& path,
                                         const ProtocolProfile& profile,
                                         Partition partition);
std::vector<ProtocolEntry> ParseProtocol(const std::filesystem::path& path,
                                         ProtocolFormat format, Partition partition);

/// Canonical format: "utterance_id label\n" per entry.
void WriteProtocol(const std::vector<ProtocolEntry>& entries,
                   const std::filesystem::path& path);

enum class ArtifactKind { kBandGain, kBandHum, kBandNotch };
std::string ArtifactKindName(ArtifactKind k);
ArtifactKind ParseArtifactKind(const std::string& name);

enum class BaseSignal { kFilteredNoise, kHarmonicMix };
std::string BaseSignalName(BaseSignal b);
BaseSignal ParseBaseSignal(const std::string& name);

/// Deterministic replay-like corpus. Bonafide utterances are a syllabic
/// envelope over pink noise (plus three random harmonic series for the
/// harmonic mix). Spoofed utterances get the artifact inside the band only:
///   band_notch  attenuate the band by `strength` dB
///   band_gain   amplify the band by `strength` dB
///   band_hum    add three tones inside the band, `strength` dB below the
///               utterance RMS
/// Both classes then receive the same stationary white floor, peak
/// normalization, 16-bit quantization and random zero padding at both ends.
struct SynthSpec {
  std::uint64_t seed = 0;
  int n_train = 40;  // per class
  int n_dev = 20;
  int n_eval = 40;
  double band_low_hz = 7000.0;
  double band_high_hz = 8000.0;
  ArtifactKind artifact = ArtifactKind::kBandNotch;
  double strength_db = 12.0;
  BaseSignal base = BaseSignal::kHarmonicMix;
  double floor_db = -40.0;      // relative to the unit-variance source
  double min_seconds = 2.0;
  double max_seconds = 4.0;
  int max_padding = 1600;       // zero samples, drawn per end from [200, max]
  bool asv_scores = true;       // also write a synthetic ASV score file

  void Validate() const;
  nlohmann::json ToJson() const;
  static SynthSpec FromJson(const nlohmann::json& j);
  int Count(Partition p) const;
};

/// One synthetic utterance, before quantization; exposed for tests.
std::vector<double> SynthesizeUtterance(const SynthSpec& spec, Label label,
                                        std::uint64_t utterance_seed);

struct PartitionInfo {
  std::string protocol;   // relative to the corpus root
  std::string audio_dir;  // idem
  ProtocolFormat format = ProtocolFormat::kCanonical;
  std::size_t count = 0;
};

struct CorpusManifest {
  std::string name;
  std::filesystem::path root;  // not serialized; the manifest's directory
  std::map<std::string, PartitionInfo> partitions;  // keyed by partition name
  TrimMode trim_mode = TrimMode::kZeros;
  std::string annotations;  // relative path, annotation trim mode only
  std::string asv_scores;   // relative path, optional
  std::string content_hash;
  nlohmann::json synth = nullptr;

  nlohmann::json ToJson() const;
  /// `root` is taken from the manifest file's directory.
  static CorpusManifest Load(const std::filesystem::path& manifest_path);
  void Save(const std::filesystem::path& manifest_path) const;

  const PartitionInfo& partition(Partition p) const;
  bool has_partition(Partition p) const;
  std::filesystem::path AudioPath(Partition p, const std::string& utterance_id) const;
  FrontendConfig frontend() const;
  std::optional<std::filesystem::path> AsvScorePath() const;
};

inline constexpr const char* kCorpusManifestName = "corpus.json";

/// Hash over the protocol files and the audio they reference.
std::string ComputeContentHash(const CorpusManifest& manifest);

/// Writes audio, canonical protocols, optional ASV scores and corpus.json.
CorpusManifest GenerateSynthetic(const SynthSpec& spec,
                                 const std::filesystem::path& out_dir,
                                 const std::string& name = "synthetic");

struct Reject {
  std::string utterance_id;
  std::string reason;
};

struct LoadedUtterance {
  ProtocolEntry entry;
  Waveform wave;  // trimmed per the manifest
};

struct LoadedPartition {
  std::vector<LoadedUtterance> items;  // protocol order
  std::vector<Reject> rejects;
};

/// Utterances of one partition, trimmed per the manifest; unreadable audio
/// is skipped and reported.
LoadedPartition LoadPartition(const CorpusManifest& manifest, Partition partition);

struct FeaturePartition {
  FeatureSet features;
  std::vector<Reject> rejects;
};

/// Front-end features of a partition; extraction is spread over `threads`
/// workers and the result keeps protocol order.
FeaturePartition LoadFeatures(const CorpusManifest& manifest, Partition partition,
                              int threads = 1);

void WriteRejects(const std::vector<Reject>& rejects, const std::filesystem::path& path);

}  // namespace subcm

#endif  // SUBCM_CORPUS_HPP_
