// subcm/corpus.cpp

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

#include "subcm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fft.hpp"
#include "parallel.hpp"
#include "subcm/hash.hpp"
#include "subcm/metrics.hpp"

namespace subcm {
namespace {

constexpr const char* kManifestFormat = "subcm-corpus-1";

// Portable variates: the std distributions are implementation defined.
double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * nn::UniformUnit(rng);
}

double Normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - nn::UniformUnit(rng);  // (0, 1]
  const double u2 = nn::UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double StdDev(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return std::sqrt(var / double(x.size()));
}

void Scale(std::vector<double>& x, double s) {
  for (double& v : x) v *= s;
}

std::vector<double> SyllabicEnvelope(std::mt19937_64& rng, int n) {
  std::vector<double> env(static_cast<std::size_t>(n), 0.0);
  int pos = 0;
  while (pos < n) {
    const int len = int(Uniform(rng, 0.12, 0.3) * kSampleRate);
    const int gap = int(Uniform(rng, 0.03, 0.2) * kSampleRate);
    const double amp = Uniform(rng, 0.3, 1.0);
    for (int i = 0; i < len && pos + i < n; ++i)
      env[std::size_t(pos + i)] +=
          amp * (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (len - 1)));
    pos += len + gap;
  }
  return env;
}

std::vector<double> PinkNoise(std::mt19937_64& rng, int n) {
  std::vector<double> white(static_cast<std::size_t>(n));
  for (double& v : white) v = Normal(rng);
  const double df = double(kSampleRate) / n;
  std::vector<double> pink = internal::FilterSpectrum(
      std::span<const double>(white), kSampleRate,
      [df](double f) { return 1.0 / std::sqrt(std::max(f, df) / 100.0); });
  Scale(pink, 1.0 / StdDev(pink));
  return pink;
}

std::vector<double> Harmonics(std::mt19937_64& rng, int n) {
  std::vector<double> h(static_cast<std::size_t>(n), 0.0);
  for (int series = 0; series < 3; ++series) {
    const double f0 = Uniform(rng, 120.0, 400.0);
    for (int k = 1; k < int(8000.0 / f0); ++k) {
      const double phase = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const double w = 2.0 * std::numbers::pi * f0 * k / kSampleRate;
      // Phasor recurrence, renormalized every block against drift.
      const std::complex<double> step = std::polar(1.0, w);
      std::complex<double> z = std::polar(1.0 / k, phase);
      for (int i = 0; i < n; ++i) {
        h[std::size_t(i)] += z.imag();
        z *= step;
        if ((i & 1023) == 1023) z = std::polar(1.0 / k, w * (i + 1) + phase);
      }
    }
  }
  Scale(h, 1.0 / StdDev(h));
  return h;
}

void ApplyArtifact(const SynthSpec& spec, std::mt19937_64& rng, std::vector<double>& x) {
  const double lo = spec.band_low_hz, hi = spec.band_high_hz;
  const auto in_band = [lo, hi](double f) { return f >= lo && f <= hi; };
  switch (spec.artifact) {
    case ArtifactKind::kBandNotch:
    case ArtifactKind::kBandGain: {
      const double db = spec.artifact == ArtifactKind::kBandNotch ? -spec.strength_db
                                                                   : spec.strength_db;
      const double g = std::pow(10.0, db / 20.0);
      x = internal::FilterSpectrum(std::span<const double>(x), kSampleRate,
                                   [&](double f) { return in_band(f) ? g : 1.0; });
      break;
    }
    case ArtifactKind::kBandHum: {
      double power = 0.0;
      for (double v : x) power += v * v;
      const double rms = std::sqrt(power / double(x.size()));
      // Three tones sharing a total power `strength` dB below the signal.
      const double amp = std::sqrt(2.0 / 3.0) * rms * std::pow(10.0, -spec.strength_db / 20.0);
      for (double q : {0.25, 0.5, 0.75}) {
        const double w = 2.0 * std::numbers::pi * (lo + q * (hi - lo)) / kSampleRate;
        const double phase = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += amp * std::sin(w * double(i) + phase);
      }
      break;
    }
  }
}

std::string UtteranceId(Partition p, Label label, int index) {
  return fmt::format("{}_{}_{:04d}", PartitionName(p), LabelName(label), index);
}

std::string Trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

}  // namespace

std::string PartitionName(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kDev: return "dev";
    case Partition::kEval: return "eval";
  }
  return "?";
}

Partition ParsePartition(const std::string& name) {
  if (name == "train") return Partition::kTrain;
  if (name == "dev") return Partition::kDev;
  if (name == "eval") return Partition::kEval;
  throw ConfigError("unknown partition '" + name + "'");
}

std::string ProtocolFormatName(ProtocolFormat f) {
  switch (f) {
    case ProtocolFormat::kCanonical: return "canonical";
    case ProtocolFormat::kV2017: return "v2017";
    case ProtocolFormat::kV2019Pa: return "v2019pa";
  }
  return "?";
}

ProtocolFormat ParseProtocolFormat(const std::string& name) {
  if (name == "canonical") return ProtocolFormat::kCanonical;
  if (name == "v2017") return ProtocolFormat::kV2017;
  if (name == "v2019pa") return ProtocolFormat::kV2019Pa;
  throw ConfigError("unknown protocol format '" + name + "'");
}

ProtocolProfile ProtocolProfile::For(ProtocolFormat format) {
  ProtocolProfile p;
  switch (format) {
    case ProtocolFormat::kCanonical:
      break;
    case ProtocolFormat::kV2017:
      // T_1000001.wav genuine M0001 S01 E01 P01 R01 (trailing columns optional)
      p.id_column = 0;
      p.label_column = 1;
      p.min_columns = 2;
      p.max_columns = 0;
      p.attribute_names = {"", "", "speaker", "phrase", "environment", "playback",
                           "recording"};
      p.label_tokens = {{"genuine", Label::kBonafide},
                        {"bonafide", Label::kBonafide},
                        {"spoof", Label::kSpoof}};
      p.strip_wav_extension = true;
      break;
    case ProtocolFormat::kV2019Pa:
      // PA_0079 PA_T_0000001 aaa - bonafide
      p.id_column = 1;
      p.label_column = 4;
      p.min_columns = 5;
      p.max_columns = 5;
      p.attribute_names = {"speaker", "", "environment", "attack", ""};
      break;
  }
  return p;
}

std::vector<ProtocolEntry> ParseProtocol(const std::filesystem::path& path,
                                         const ProtocolProfile& profile,
                                         Partition partition) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open protocol " + path.string());
  std::vector<ProtocolEntry> entries;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  const auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    line = Trim(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string c; fields >> c;) cols.push_back(c);
    if (int(cols.size()) < profile.min_columns ||
        (profile.max_columns > 0 && int(cols.size()) > profile.max_columns) ||
        int(cols.size()) <= std::max(profile.id_column, profile.label_column))
      throw DataError(where() + "malformed line '" + line + "'");
    ProtocolEntry e;
    e.partition = partition;
    e.utterance_id = cols[std::size_t(profile.id_column)];
    if (profile.strip_wav_extension && e.utterance_id.ends_with(".wav"))
      e.utterance_id.resize(e.utterance_id.size() - 4);
    const std::string& token = cols[std::size_t(profile.label_column)];
    auto it = profile.label_tokens.find(token);
    if (it == profile.label_tokens.end())
      throw DataError(where() + "unknown label '" + token + "'");
    e.label = it->second;
    for (std::size_t c = 0; c < cols.size() && c < profile.attribute_names.size(); ++c)
      if (!profile.attribute_names[c].empty() && cols[c] != "-")
        e.attributes[profile.attribute_names[c]] = cols[c];
    if (!seen.insert(e.utterance_id).second)
      throw DataError(where() + "duplicate utterance id '" + e.utterance_id + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ProtocolEntry> ParseProtocol(const std::filesystem::path& path,
                                         ProtocolFormat format, Partition partition) {
  return ParseProtocol(path, ProtocolProfile::For(format), partition);
}

void WriteProtocol(const std::vector<ProtocolEntry>& entries,
                   const std::filesystem::path& path) {
  std::string out;
  for (const auto& e : entries) {
    if (e.label == Label::kUnknown)
      throw DataError("cannot write unlabeled entry '" + e.utterance_id + "'");
    out += e.utterance_id;
    out += ' ';
    out += LabelName(e.label);
    out += '\n';
  }
  WriteFileBytes(path, out);
}

std::string ArtifactKindName(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::kBandGain: return "band_gain";
    case ArtifactKind::kBandHum: return "band_hum";
    case ArtifactKind::kBandNotch: return "band_notch";
  }
  return "?";
}

ArtifactKind ParseArtifactKind(const std::string& name) {
  if (name == "band_gain") return ArtifactKind::kBandGain;
  if (name == "band_hum") return ArtifactKind::kBandHum;
  if (name == "band_notch") return ArtifactKind::kBandNotch;
  throw ConfigError("unknown artifact kind '" + name + "'");
}

std::string BaseSignalName(BaseSignal b) {
  return b == BaseSignal::kFilteredNoise ? "filtered_noise" : "harmonic_mix";
}

BaseSignal ParseBaseSignal(const std::string& name) {
  if (name == "filtered_noise") return BaseSignal::kFilteredNoise;
  if (name == "harmonic_mix") return BaseSignal::kHarmonicMix;
  throw ConfigError("unknown base signal '" + name + "'");
}

void SynthSpec::Validate() const {
  if (n_train <= 0 || n_dev <= 0 || n_eval <= 0)
    throw ConfigError("synthetic partition counts must be positive");
  if (!(band_low_hz >= 0 && band_low_hz < band_high_hz && band_high_hz <= 8000))
    throw ConfigError("artifact band must satisfy 0 <= low < high <= 8000");
  if (!(strength_db > 0)) throw ConfigError("artifact strength must be positive");
  if (!(min_seconds > 0.1 && min_seconds <= max_seconds))
    throw ConfigError("bad synthetic duration range");
  if (max_padding < 200) throw ConfigError("max_padding must be at least 200");
}

nlohmann::json SynthSpec::ToJson() const {
  return {{"seed", seed},
          {"n_per_class", {n_train, n_dev, n_eval}},
          {"band_hz", {band_low_hz, band_high_hz}},
          {"artifact", ArtifactKindName(artifact)},
          {"strength_db", strength_db},
          {"base_signal", BaseSignalName(base)},
          {"floor_db", floor_db},
          {"seconds", {min_seconds, max_seconds}},
          {"max_padding", max_padding},
          {"asv_scores", asv_scores}};
}

SynthSpec SynthSpec::FromJson(const nlohmann::json& j) {
  SynthSpec s;
  if (!j.is_object()) throw ConfigError("synthetic spec must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") s.seed = v.get<std::uint64_t>();
      else if (key == "n_per_class") {
        const auto n = v.get<std::vector<int>>();
        if (n.size() != 3) throw ConfigError("n_per_class needs train, dev and eval counts");
        s.n_train = n[0];
        s.n_dev = n[1];
        s.n_eval = n[2];
      } else if (key == "band_hz") {
        const auto b = v.get<std::vector<double>>();
        if (b.size() != 2) throw ConfigError("band_hz needs [low, high]");
        s.band_low_hz = b[0];
        s.band_high_hz = b[1];
      } else if (key == "artifact") s.artifact = ParseArtifactKind(v.get<std::string>());
      else if (key == "strength_db") s.strength_db = v.get<double>();
      else if (key == "base_signal") s.base = ParseBaseSignal(v.get<std::string>());
      else if (key == "floor_db") s.floor_db = v.get<double>();
      else if (key == "seconds") {
        const auto d = v.get<std::vector<double>>();
        if (d.size() != 2) throw ConfigError("seconds needs [min, max]");
        s.min_seconds = d[0];
        s.max_seconds = d[1];
      } else if (key == "max_padding") s.max_padding = v.get<int>();
      else if (key == "asv_scores") s.asv_scores = v.get<bool>();
      else throw ConfigError("unknown synthetic spec key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad synthetic spec: ") + e.what());
  }
  s.Validate();
  return s;
}

int SynthSpec::Count(Partition p) const {
  switch (p) {
    case Partition::kTrain: return n_train;
    case Partition::kDev: return n_dev;
    case Partition::kEval: return n_eval;
  }
  return 0;
}

std::vector<double> SynthesizeUtterance(const SynthSpec& spec, Label label,
                                        std::uint64_t utterance_seed) {
  std::mt19937_64 rng(utterance_seed);
  // Lengths are multiples of 320 samples (20 ms).
  const int n = 320 * int(std::lround(Uniform(rng, spec.min_seconds, spec.max_seconds) *
                                      kSampleRate / 320.0));
  const std::vector<double> env = SyllabicEnvelope(rng, n);
  const std::vector<double> pink = PinkNoise(rng, n);
  std::vector<double> x(static_cast<std::size_t>(n));
  if (spec.base == BaseSignal::kHarmonicMix) {
    const std::vector<double> harm = Harmonics(rng, n);
    for (int i = 0; i < n; ++i) x[i] = env[i] * (0.5 * pink[i] + harm[i]);
  } else {
    for (int i = 0; i < n; ++i) x[i] = env[i] * pink[i];
  }
  if (label == Label::kSpoof) ApplyArtifact(spec, rng, x);
  const double floor = std::pow(10.0, spec.floor_db / 20.0);
  for (double& v : x) v += floor * Normal(rng);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  Scale(x, 0.5 / peak);
  const int pad_front = 200 + int(rng() % std::uint64_t(spec.max_padding - 199));
  const int pad_back = 200 + int(rng() % std::uint64_t(spec.max_padding - 199));
  std::vector<double> out(std::size_t(pad_front), 0.0);
  out.insert(out.end(), x.begin(), x.end());
  out.resize(out.size() + std::size_t(pad_back), 0.0);
  return out;
}

nlohmann::json CorpusManifest::ToJson() const {
  nlohmann::json parts = nlohmann::json::object();
  for (const auto& [name, p] : partitions)
    parts[name] = {{"protocol", p.protocol},
                   {"audio_dir", p.audio_dir},
                   {"format", ProtocolFormatName(p.format)},
                   {"count", p.count}};
  nlohmann::json j = {{"format", kManifestFormat},
                      {"name", name},
                      {"partitions", parts},
                      {"trim_mode", TrimModeName(trim_mode)},
                      {"content_hash", content_hash}};
  if (!annotations.empty()) j["annotations"] = annotations;
  if (!asv_scores.empty()) j["asv_scores"] = asv_scores;
  if (!synth.is_null()) j["synth"] = synth;
  return j;
}

CorpusManifest CorpusManifest::Load(const std::filesystem::path& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFileBytes(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse corpus manifest " + manifest_path.string() + ": " +
                      e.what());
  }
  CorpusManifest m;
  m.root = manifest_path.parent_path();
  try {
    if (j.value("format", std::string()) != kManifestFormat)
      throw ConfigError("not a corpus manifest: " + manifest_path.string());
    m.name = j.at("name").get<std::string>();
    for (const auto& [name, p] : j.at("partitions").items()) {
      ParsePartition(name);
      PartitionInfo info;
      info.protocol = p.at("protocol").get<std::string>();
      info.audio_dir = p.value("audio_dir", std::string("."));
      info.format = ParseProtocolFormat(p.value("format", std::string("canonical")));
      info.count = p.value("count", std::size_t{0});
      m.partitions[name] = info;
    }
    m.trim_mode = ParseTrimMode(j.value("trim_mode", std::string("zeros")));
    m.annotations = j.value("annotations", std::string());
    m.asv_scores = j.value("asv_scores", std::string());
    m.content_hash = j.value("content_hash", std::string());
    if (j.contains("synth")) m.synth = j["synth"];
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad corpus manifest " + manifest_path.string() + ": " + e.what());
  }
  if (m.trim_mode == TrimMode::kAnnotation && m.annotations.empty())
    throw ConfigError("annotation trim mode needs an 'annotations' file");
  return m;
}

void CorpusManifest::Save(const std::filesystem::path& manifest_path) const {
  WriteFileBytes(manifest_path, ToJson().dump(2) + "\n");
}

bool CorpusManifest::has_partition(Partition p) const {
  return partitions.count(PartitionName(p)) > 0;
}

const PartitionInfo& CorpusManifest::partition(Partition p) const {
  auto it = partitions.find(PartitionName(p));
  if (it == partitions.end())
    throw ConfigError("corpus '" + name + "' has no " + PartitionName(p) + " partition");
  return it->second;
}

std::filesystem::path CorpusManifest::AudioPath(Partition p,
                                                const std::string& utterance_id) const {
  return root / partition(p).audio_dir / (utterance_id + ".wav");
}

FrontendConfig CorpusManifest::frontend() const {
  FrontendConfig c;
  c.trim_mode = trim_mode;
  return c;
}

std::optional<std::filesystem::path> CorpusManifest::AsvScorePath() const {
  if (asv_scores.empty()) return std::nullopt;
  return root / asv_scores;
}

std::string ComputeContentHash(const CorpusManifest& manifest) {
  std::string digest_input;
  for (const auto& [name, info] : manifest.partitions) {
    const Partition p = ParsePartition(name);
    const std::filesystem::path protocol = manifest.root / info.protocol;
    digest_input += name + " " + info.protocol + " " + Sha256Hex(ReadFileBytes(protocol)) + "\n";
    for (const auto& e : ParseProtocol(protocol, info.format, p)) {
      const auto audio = manifest.AudioPath(p, e.utterance_id);
      const std::string h = std::filesystem::exists(audio) ? Sha256Hex(ReadFileBytes(audio))
                                                            : std::string("missing");
      digest_input += e.utterance_id + " " + h + "\n";
    }
  }
  for (const std::string& extra : {manifest.annotations, manifest.asv_scores})
    if (!extra.empty())
      digest_input += extra + " " + Sha256Hex(ReadFileBytes(manifest.root / extra)) + "\n";
  return Sha256Hex(digest_input);
}

CorpusManifest GenerateSynthetic(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                 const std::string& name) {
  spec.Validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  std::filesystem::create_directories(out_dir / "protocols", ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  CorpusManifest m;
  m.name = name;
  m.root = out_dir;
  m.trim_mode = TrimMode::kZeros;
  m.synth = spec.ToJson();
  for (Partition p : {Partition::kTrain, Partition::kDev, Partition::kEval}) {
    std::vector<ProtocolEntry> entries;
    for (Label label : {Label::kBonafide, Label::kSpoof}) {
      for (int i = 1; i <= spec.Count(p); ++i) {
        const std::string id = UtteranceId(p, label, i);
        const std::uint64_t seed = DeriveSeed(
            spec.seed, "utterance/" + PartitionName(p) + "/" + std::string(LabelName(label)),
            std::uint64_t(i));
        const std::vector<double> x = SynthesizeUtterance(spec, label, seed);
        Waveform w;
        w.utterance_id = id;
        w.samples.assign(x.begin(), x.end());
        WriteWaveform(w, out_dir / "wav" / (id + ".wav"));
        entries.push_back({id, label, p, {}});
      }
    }
    const std::string protocol = "protocols/" + PartitionName(p) + ".txt";
    WriteProtocol(entries, out_dir / protocol);
    m.partitions[PartitionName(p)] = {protocol, "wav", ProtocolFormat::kCanonical,
                                      entries.size()};
  }
  if (spec.asv_scores) {
    // Gaussian ASV scores: fixed operating rates for the tandem cost.
    std::mt19937_64 rng(DeriveSeed(spec.seed, "asv"));
    AsvScoreSet asv;
    const int n = 200;
    for (int i = 1; i <= n; ++i)
      asv.trials.push_back({fmt::format("asv_target_{:04d}", i), AsvTrialType::kTarget,
                            4.0 + Normal(rng)});
    for (int i = 1; i <= n; ++i)
      asv.trials.push_back({fmt::format("asv_nontarget_{:04d}", i), AsvTrialType::kNontarget,
                            -4.0 + Normal(rng)});
    for (int i = 1; i <= n; ++i)
      asv.trials.push_back({fmt::format("asv_spoof_{:04d}", i), AsvTrialType::kSpoof,
                            2.0 + 1.5 * Normal(rng)});
    m.asv_scores = "asv_scores.txt";
    WriteAsvScoreFile(asv, out_dir / m.asv_scores);
  }
  m.content_hash = ComputeContentHash(m);
  m.Save(out_dir / kCorpusManifestName);
  spdlog::info("synthetic corpus '{}' written to {} (hash {})", name, out_dir.string(),
               m.content_hash.substr(0, 12));
  return m;
}

namespace {

std::vector<ProtocolEntry> PartitionEntries(const CorpusManifest& manifest, Partition p) {
  const PartitionInfo& info = manifest.partition(p);
  return ParseProtocol(manifest.root / info.protocol, info.format, p);
}

std::optional<AnnotationTable> Annotations(const CorpusManifest& manifest) {
  if (manifest.trim_mode != TrimMode::kAnnotation) return std::nullopt;
  return AnnotationTable::Load(manifest.root / manifest.annotations);
}

}  // namespace

LoadedPartition LoadPartition(const CorpusManifest& manifest, Partition partition) {
  const auto annotations = Annotations(manifest);
  LoadedPartition out;
  for (auto& e : PartitionEntries(manifest, partition)) {
    try {
      Waveform w = LoadWaveform(manifest.AudioPath(partition, e.utterance_id));
      w.utterance_id = e.utterance_id;
      switch (manifest.trim_mode) {
        case TrimMode::kNone: break;
        case TrimMode::kZeros: w = TrimZeros(w); break;
        case TrimMode::kAnnotation: w = annotations->Apply(w); break;
      }
      out.items.push_back({std::move(e), std::move(w)});
    } catch (const DataError& err) {
      spdlog::warn("skipping {}: {}", e.utterance_id, err.what());
      out.rejects.push_back({e.utterance_id, err.what()});
    }
  }
  return out;
}

FeaturePartition LoadFeatures(const CorpusManifest& manifest, Partition partition,
                              int threads) {
  const auto annotations = Annotations(manifest);
  const auto entries = PartitionEntries(manifest, partition);
  const FrontendConfig frontend = manifest.frontend();
  std::vector<std::optional<FeatureMatrix>> features(entries.size());
  std::vector<std::string> errors(entries.size());
  internal::ParallelFor(entries.size(), threads, [&](std::size_t i) {
    try {
      Waveform w = LoadWaveform(manifest.AudioPath(partition, entries[i].utterance_id));
      w.utterance_id = entries[i].utterance_id;
      features[i] = ExtractFeatures(w, frontend, annotations ? &*annotations : nullptr).values;
    } catch (const DataError& err) {
      errors[i] = err.what();
    }
  });
  FeaturePartition out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (features[i]) {
      out.features.Add(entries[i].utterance_id, entries[i].label, std::move(*features[i]));
    } else {
      spdlog::warn("skipping {}: {}", entries[i].utterance_id, errors[i]);
      out.rejects.push_back({entries[i].utterance_id, errors[i]});
    }
  }
  return out;
}

void WriteRejects(const std::vector<Reject>& rejects, const std::filesystem::path& path) {
  std::string out;
  for (const auto& r : rejects) out += r.utterance_id + "\t" + r.reason + "\n";
  WriteFileBytes(path, out);
}

}  // namespace subcm
