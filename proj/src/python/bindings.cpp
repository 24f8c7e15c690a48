// subcm/python/bindings.cpp

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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "subcm/checkpoint.hpp"
#include "subcm/common.hpp"
#include "subcm/corpus.hpp"
#include "subcm/experiment.hpp"
#include "subcm/frontend.hpp"
#include "subcm/fusion.hpp"
#include "subcm/metrics.hpp"
#include "subcm/subband.hpp"
#include "subcm/training.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace subcm {
namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<float> ToNumpy(const FeatureMatrix& m) {
  py::array_t<float> out({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), out.mutable_data());
  return out;
}

FeatureMatrix FromNumpy(const FloatArray& a) {
  if (a.ndim() != 2) throw DataError("expected a 2-d array");
  FeatureMatrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data());
  return m;
}

Waveform ToWaveform(const FloatArray& samples) {
  if (samples.ndim() != 1) throw DataError("expected a 1-d array");
  Waveform w;
  w.samples.assign(samples.data(), samples.data() + samples.size());
  return w;
}

std::vector<double> ToVector(const DoubleArray& a) {
  if (a.ndim() != 1) throw DataError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

TrialScores ToTrials(const std::vector<std::string>& ids, const DoubleArray& scores,
                     const std::optional<std::vector<std::string>>& labels) {
  const auto s = ToVector(scores);
  if (s.size() != ids.size()) throw DataError("ids and scores differ in length");
  if (labels && labels->size() != ids.size())
    throw DataError("ids and labels differ in length");
  TrialScores t;
  for (std::size_t i = 0; i < ids.size(); ++i)
    t.entries.push_back({ids[i], s[i], labels ? ParseLabel((*labels)[i]) : Label::kUnknown});
  t.Validate();
  return t;
}

py::dict FromTrials(const TrialScores& t) {
  std::vector<std::string> ids, labels;
  py::array_t<double> scores(static_cast<py::ssize_t>(t.entries.size()));
  auto* out = scores.mutable_data();
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    ids.push_back(t.entries[i].utterance_id);
    labels.emplace_back(LabelName(t.entries[i].label));
    out[i] = t.entries[i].score;
  }
  py::dict d;
  d["ids"] = ids;
  d["scores"] = scores;
  d["labels"] = labels;
  return d;
}

std::vector<TrialScores> ToSystems(const std::vector<DoubleArray>& systems,
                                   const std::optional<DoubleArray>& labels) {
  if (systems.empty()) throw DataError("no systems");
  std::vector<double> y;
  if (labels) y = ToVector(*labels);
  std::vector<TrialScores> out;
  for (std::size_t k = 0; k < systems.size(); ++k) {
    const auto s = ToVector(systems[k]);
    if (labels && s.size() != y.size()) throw DataError("scores and labels differ in length");
    TrialScores t;
    t.source = "system" + std::to_string(k);
    for (std::size_t i = 0; i < s.size(); ++i) {
      Label l = Label::kUnknown;
      if (labels) l = y[i] > 0.5 ? Label::kBonafide : Label::kSpoof;
      t.entries.push_back({std::to_string(i), s[i], l});
    }
    out.push_back(std::move(t));
  }
  return out;
}

nlohmann::json ParseJson(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid json: ") + e.what());
  }
}

TrialScores ScoreFrom(const std::vector<DoubleArray>& bonafide_spoof) {
  TrialScores t;
  const auto b = ToVector(bonafide_spoof.at(0));
  const auto s = ToVector(bonafide_spoof.at(1));
  for (std::size_t i = 0; i < b.size(); ++i)
    t.entries.push_back({"b" + std::to_string(i), b[i], Label::kBonafide});
  for (std::size_t i = 0; i < s.size(); ++i)
    t.entries.push_back({"s" + std::to_string(i), s[i], Label::kSpoof});
  return t;
}

}  // namespace
}  // namespace subcm

PYBIND11_MODULE(_core, m) {
  using namespace subcm;
  m.doc() = "Subband countermeasure core";

  auto& error = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", error);
  py::register_exception<DataError>(m, "DataError", error);
  py::register_exception<DivergenceError>(m, "DivergenceError", error);

  m.attr("SAMPLE_RATE") = kSampleRate;
  m.attr("NUM_FRAMES") = kNumFrames;
  m.attr("NUM_BINS") = kNumBins;
  m.attr("STANDARD_SAMPLES") = kStandardSamples;

  // Front-end.
  m.def("load_waveform", [](const fs::path& path) {
    const Waveform w = LoadWaveform(path);
    return py::array_t<float>(static_cast<py::ssize_t>(w.samples.size()), w.samples.data());
  }, py::arg("path"));
  m.def("write_waveform", [](const FloatArray& samples, const fs::path& path) {
    WriteWaveform(ToWaveform(samples), path);
  }, py::arg("samples"), py::arg("path"));
  m.def("trim_zeros", [](const FloatArray& samples) {
    const Waveform w = TrimZeros(ToWaveform(samples));
    return py::array_t<float>(static_cast<py::ssize_t>(w.samples.size()), w.samples.data());
  }, py::arg("samples"));
  m.def("standardize_duration", [](const FloatArray& samples, int target) {
    const Waveform w = StandardizeDuration(ToWaveform(samples), target);
    return py::array_t<float>(static_cast<py::ssize_t>(w.samples.size()), w.samples.data());
  }, py::arg("samples"), py::arg("target_samples") = kStandardSamples);
  m.def("log_power_spectrogram", [](const FloatArray& samples) {
    return ToNumpy(LogPowerSpectrogram(ToWaveform(samples)).values);
  }, py::arg("samples"));
  m.def("mvn_normalize", [](const FloatArray& spec) {
    Spectrogram s;
    s.values = FromNumpy(spec);
    return ToNumpy(MvnNormalize(s).values);
  }, py::arg("spectrogram"));
  m.def("extract_features", [](const FloatArray& samples, const std::string& trim) {
    const TrimMode mode = ParseTrimMode(trim);
    if (mode == TrimMode::kAnnotation)
      throw ConfigError("annotation trimming needs a corpus; use 'zeros' or 'none'");
    FrontendConfig config;
    config.trim_mode = mode;
    return ToNumpy(ExtractFeatures(ToWaveform(samples), config).values);
  }, py::arg("samples"), py::arg("trim") = "zeros");

  // Subbands.
  m.def("subband_widths", [](int n) { return SubbandPlan::Make(n).widths(); }, py::arg("n"));
  m.def("subband_offsets", [](int n) { return SubbandPlan::Make(n).offsets(); }, py::arg("n"));
  m.def("subband_labels", [](int n) {
    const SubbandPlan plan = SubbandPlan::Make(n);
    std::vector<std::string> out;
    for (int b = 0; b < plan.n(); ++b) out.push_back(plan.BandLabel(b));
    return out;
  }, py::arg("n"));
  m.def("split", [](const FloatArray& spec, int n) {
    Spectrogram s;
    s.values = FromNumpy(spec);
    std::vector<py::array_t<float>> out;
    for (const auto& band : Split(s, SubbandPlan::Make(n))) out.push_back(ToNumpy(band.values));
    return out;
  }, py::arg("spectrogram"), py::arg("n"));

  // Metrics.
  m.def("error_curve", [](const DoubleArray& bonafide, const DoubleArray& spoof) {
    const auto b = ToVector(bonafide), s = ToVector(spoof);
    const ErrorCurve c = ComputeErrorCurve(b, s);
    py::dict d;
    d["thresholds"] = c.thresholds;
    d["far"] = c.far;
    d["frr"] = c.frr;
    return d;
  }, py::arg("bonafide"), py::arg("spoof"));
  m.def("eer", [](const DoubleArray& bonafide, const DoubleArray& spoof) {
    const auto b = ToVector(bonafide), s = ToVector(spoof);
    return ComputeEer(b, s);
  }, py::arg("bonafide"), py::arg("spoof"));
  m.def("min_tdcf", [](const DoubleArray& bonafide, const DoubleArray& spoof,
                       const std::string& params_json) {
    TdcfParams p = TdcfParams::FromJson(ParseJson(params_json));
    p.Validate();
    return MinTdcf(ScoreFrom({bonafide, spoof}), p);
  }, py::arg("bonafide"), py::arg("spoof"), py::arg("params_json"));
  m.def("tdcf_params", [](double p_miss, double p_fa, double p_miss_spoof) {
    TdcfParams p;
    p.asv = {p_miss, p_fa, p_miss_spoof};
    return p.ToJson().dump();
  }, py::arg("p_miss"), py::arg("p_fa"), py::arg("p_miss_spoof"));
  m.def("asv_rates", [](const fs::path& path) {
    const AsvRates r = AsvOperatingRates(ReadAsvScoreFile(path));
    return py::make_tuple(r.p_miss, r.p_fa, r.p_miss_spoof);
  }, py::arg("path"));

  // Score files.
  m.def("read_scores", [](const fs::path& scores, const std::optional<fs::path>& labels) {
    if (!labels) return FromTrials(ReadScoreFile(scores));
    const auto l = ReadLabelFile(*labels);
    return FromTrials(ReadScoreFile(scores, &l));
  }, py::arg("scores"), py::arg("labels") = py::none());
  m.def("write_scores", [](const std::vector<std::string>& ids, const DoubleArray& scores,
                           const fs::path& path) {
    WriteScoreFile(ToTrials(ids, scores, std::nullopt), path);
  }, py::arg("ids"), py::arg("scores"), py::arg("path"));

  // Fusion.
  m.def("fuse_linear", [](const std::vector<DoubleArray>& systems) {
    const TrialScores fused = FuseLinear(ToSystems(systems, std::nullopt));
    return py::object(FromTrials(fused)["scores"]);
  }, py::arg("systems"));
  m.def("fuse_weighted", [](const std::vector<DoubleArray>& systems,
                            const std::vector<double>& weights, double offset) {
    const TrialScores fused =
        FuseWeighted(ToSystems(systems, std::nullopt), {weights, offset});
    return py::object(FromTrials(fused)["scores"]);
  }, py::arg("systems"), py::arg("weights"), py::arg("offset") = 0.0);
  m.def("fit_logistic_fusion", [](const std::vector<DoubleArray>& systems,
                                  const DoubleArray& labels, double l2, double prior) {
    LogisticFitOptions opt;
    opt.l2 = l2;
    opt.effective_prior = prior;
    const FusionWeights w = FitLogisticFusion(ToSystems(systems, labels), opt);
    return py::make_tuple(w.weights, w.offset);
  }, py::arg("systems"), py::arg("labels"), py::arg("l2") = 1e-3, py::arg("prior") = 0.5);

  // Corpus.
  m.def("generate_synthetic", [](const fs::path& out_dir, const std::string& spec_json,
                                 const std::string& name) {
    const SynthSpec spec = SynthSpec::FromJson(ParseJson(spec_json));
    return GenerateSynthetic(spec, out_dir, name).ToJson().dump();
  }, py::arg("out_dir"), py::arg("spec_json") = "{}", py::arg("name") = "synthetic");
  m.def("load_features", [](const fs::path& manifest, const std::string& partition,
                            int threads) {
    const CorpusManifest cm = CorpusManifest::Load(manifest);
    const FeaturePartition fp = LoadFeatures(cm, ParsePartition(partition), threads);
    std::vector<std::string> labels;
    std::vector<py::array_t<float>> feats;
    for (std::size_t i = 0; i < fp.features.size(); ++i) {
      labels.emplace_back(LabelName(fp.features.labels[i]));
      feats.push_back(ToNumpy(fp.features.features[i]));
    }
    py::dict d;
    d["ids"] = fp.features.ids;
    d["labels"] = labels;
    d["features"] = feats;
    d["rejects"] = fp.rejects.size();
    return d;
  }, py::arg("manifest"), py::arg("partition"), py::arg("threads") = 1);

  // Models.
  m.def("checkpoint_manifest", [](const fs::path& dir) {
    return ReadManifest(dir).ToJson().dump();
  }, py::arg("dir"));
  m.def("score_checkpoint", [](const fs::path& dir, const std::vector<FloatArray>& features) {
    Checkpoint ck = LoadCheckpoint(dir);
    const BandSelection sel{SubbandPlan::Make(ck.manifest.plan_n), ck.manifest.band_indices};
    FeatureSet set;
    for (std::size_t i = 0; i < features.size(); ++i) {
      FeatureMatrix f = FromNumpy(features[i]);
      if (f.rows() != kNumFrames || f.cols() != kNumBins)
        throw DataError("features must be " + std::to_string(kNumFrames) + " x " +
                        std::to_string(kNumBins));
      set.Add(std::to_string(i), Label::kUnknown, std::move(f));
    }
    return ScoreFeatures(ck.classifier(), sel, set);
  }, py::arg("dir"), py::arg("features"));

  // Experiments.
  m.def("run_experiment", [](const std::string& config_json, const std::string& stage) {
    ExperimentConfig config = ExperimentConfig::FromJson(ParseJson(config_json));
    config.Validate();
    Experiment exp(config);
    py::gil_scoped_release release;
    if (stage == "pretrain") {
      const auto ids = exp.Pretrain();
      return nlohmann::json(ids).dump();
    }
    if (stage == "joint") return nlohmann::json(exp.Joint()).dump();
    if (stage == "fuse") return exp.Fuse().ToJson().dump();
    throw ConfigError("unknown stage '" + stage + "'");
  }, py::arg("config_json"), py::arg("stage"));
}
