// tools/subcm_main.cpp

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

// Command line front end: synth, pretrain, joint, score, fuse, evaluate and
// report over declarative experiment configs.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "subcm/experiment.hpp"
#include "subcm/hash.hpp"

namespace {

namespace fs = std::filesystem;
using namespace subcm;

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kDivergence = 4 };

struct GlobalOptions {
  std::string config;
  std::string seed_list;
  std::string out;
  std::string device = "cpu";
  int threads = 0;
  bool verbose = false;
};

std::vector<std::uint64_t> ParseSeedList(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "' in --seed-list");
    }
  }
  if (seeds.empty()) throw ConfigError("--seed-list is empty");
  return seeds;
}

ExperimentConfig LoadConfig(const GlobalOptions& g) {
  if (g.device != "cpu") throw ConfigError("unsupported device '" + g.device + "' (cpu only)");
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::Load(g.config);
  if (!g.seed_list.empty()) {
    c.training.seeds = ParseSeedList(g.seed_list);
    if (c.joint_training) c.joint_training->seeds = c.training.seeds;
  }
  if (!g.out.empty()) c.out = g.out;
  if (g.threads > 0) c.threads = g.threads;
  c.Validate();
  return c;
}

void Save(const ExperimentConfig& c, const std::string& command) {
  nlohmann::json j = c.ToJson();
  j["command"] = command;
  WriteFileBytes(c.dir() / ("config." + command + ".json"), j.dump(2) + "\n");
}

int Run(int argc, char** argv) {
  CLI::App app{"Subband CNN replay-spoofing countermeasure"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed-list", g.seed_list, "Comma separated training seeds");
  app.add_option("--out", g.out, "Output root for experiment directories");
  app.add_option("--device", g.device, "Compute device (cpu)");
  app.add_option("--threads", g.threads, "Concurrent runs / extraction workers");
  app.add_flag("-v,--verbose", g.verbose, "Per-epoch logging");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  std::string synth_dest;
  synth->add_option("--dest", synth_dest, "Corpus directory (default: the config's corpus dir)");

  auto* pretrain = app.add_subcommand("pretrain", "Train and select one sub-CNN per band");
  auto* joint = app.add_subcommand("joint", "Fine-tune the joint model from pretrained sub-CNNs");

  auto* score = app.add_subcommand("score", "Score one corpus partition with a checkpoint");
  std::string score_ckpt, score_corpus, score_partition = "eval", score_dest;
  score->add_option("--checkpoint", score_ckpt, "Checkpoint directory")->required();
  score->add_option("--corpus", score_corpus, "Corpus manifest (default: config corpus)");
  score->add_option("--partition", score_partition, "train, dev or eval");
  score->add_option("--dest", score_dest, "Model directory receiving scores/");

  auto* fuse = app.add_subcommand("fuse", "LS or WLS fusion of sub-CNN scores");
  std::string fuse_mode, fuse_systems, fuse_source;
  fuse->add_option("--mode", fuse_mode, "ls or wls");
  fuse->add_option("--systems", fuse_systems, "Comma separated model ids");
  fuse->add_option("--source", fuse_source, "Experiment directory holding the systems");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on corpora");
  std::string eval_ckpt;
  std::vector<std::string> eval_corpora;
  evaluate->add_option("--checkpoint", eval_ckpt, "Checkpoint directory")->required();
  evaluate->add_option("--corpus", eval_corpora,
                       "Corpus manifests (default: config corpus and eval_corpora)");

  auto* report = app.add_subcommand("report", "Render result tables");
  std::vector<std::string> report_dirs;
  std::string report_dest;
  report->add_option("dirs", report_dirs, "Experiment or output directories");
  report->add_option("--dest", report_dest, "Directory for results.md and results.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

  if (synth->parsed()) {
    const ExperimentConfig c = LoadConfig(g);
    if (!c.synth) throw ConfigError("config has no 'synth' section");
    fs::path dest = synth_dest.empty() ? c.corpus.parent_path() : fs::path(synth_dest);
    if (dest.empty()) throw ConfigError("no corpus directory (set 'corpus' or --dest)");
    const std::string name = fs::absolute(dest).lexically_normal().filename().string();
    const CorpusManifest m = GenerateSynthetic(*c.synth, dest, name.empty() ? "synthetic" : name);
    std::cout << (dest / kCorpusManifestName).string() << " " << m.content_hash << "\n";
    return kOk;
  }
  if (report->parsed()) {
    std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
    if (dirs.empty()) dirs.push_back(g.out.empty() ? fs::path("runs") : fs::path(g.out));
    const auto rows = CollectResults(dirs);
    const std::string md = RenderMarkdown(rows);
    if (!report_dest.empty()) {
      WriteFileBytes(fs::path(report_dest) / "results.md", md);
      WriteFileBytes(fs::path(report_dest) / "results.csv", RenderCsv(rows));
    }
    std::cout << md;
    return kOk;
  }

  ExperimentConfig c = LoadConfig(g);
  if (fuse->parsed()) {
    FusionConfig f = c.fusion.value_or(FusionConfig{});
    if (!fuse_mode.empty()) f.mode = ParseFusionMode(fuse_mode);
    if (!fuse_systems.empty()) {
      f.systems.clear();
      std::stringstream ss(fuse_systems);
      for (std::string s; std::getline(ss, s, ',');) f.systems.push_back(s);
    }
    if (!fuse_source.empty()) f.source = fuse_source;
    if (f.systems.empty()) throw ConfigError("no fusion systems given");
    c.fusion = f;
  }
  Experiment exp(c);
  if (pretrain->parsed()) {
    Save(c, "pretrain");
    for (const auto& id : exp.Pretrain()) std::cout << (c.dir() / id / "best").string() << "\n";
  } else if (joint->parsed()) {
    Save(c, "joint");
    std::cout << (c.dir() / exp.Joint() / "best").string() << "\n";
  } else if (score->parsed()) {
    const fs::path corpus = score_corpus.empty() ? c.corpus : fs::path(score_corpus);
    const CheckpointManifest m = ReadManifest(score_ckpt);
    const fs::path dest = score_dest.empty() ? c.dir() / m.model_id : fs::path(score_dest);
    const TrialScores s = exp.Score(score_ckpt, corpus, ParsePartition(score_partition), dest);
    std::cout << s.entries.size() << " trials scored\n";
  } else if (fuse->parsed()) {
    Save(c, "fuse");
    const ResultRow row = exp.Fuse();
    std::cout << RenderMarkdown({row});
  } else if (evaluate->parsed()) {
    std::vector<fs::path> corpora(eval_corpora.begin(), eval_corpora.end());
    if (corpora.empty()) {
      corpora.push_back(c.corpus);
      corpora.insert(corpora.end(), c.eval_corpora.begin(), c.eval_corpora.end());
    }
    std::vector<ResultRow> rows;
    for (const auto& corpus : corpora) rows.push_back(exp.Evaluate(eval_ckpt, corpus));
    std::cout << RenderMarkdown(rows);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const subcm::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const subcm::DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kData;
  } catch (const subcm::DivergenceError& e) {
    spdlog::error("training diverged: {}", e.what());
    return kDivergence;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}
