// subcm/scores.cpp

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

#include "subcm/scores.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "subcm/hash.hpp"

namespace subcm {

void TrialScores::Validate() const {
  std::set<std::string_view> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.utterance_id).second)
      throw DataError("duplicate utterance id '" + e.utterance_id + "' in " + source);
    if (!std::isfinite(e.score))
      throw DataError("non-finite score for '" + e.utterance_id + "' in " + source);
  }
}

std::size_t TrialScores::Count(Label label) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.label == label;
  return n;
}

std::vector<double> TrialScores::ScoresOf(Label label) const {
  std::vector<double> out;
  for (const auto& e : entries)
    if (e.label == label) out.push_back(e.score);
  return out;
}

std::map<std::string, Label> TrialScores::Labels() const {
  std::map<std::string, Label> out;
  for (const auto& e : entries) out[e.utterance_id] = e.label;
  return out;
}

void WriteScoreFile(const TrialScores& scores, const std::filesystem::path& path) {
  scores.Validate();
  std::string out;
  for (const auto& e : scores.entries)
    out += fmt::format("{} {:.6f}\n", e.utterance_id, e.score);
  WriteFileBytes(path, out);
}

void WriteLabelFile(const TrialScores& scores, const std::filesystem::path& path) {
  std::string out;
  for (const auto& e : scores.entries) {
    if (e.label == Label::kUnknown)
      throw DataError("cannot write label file: '" + e.utterance_id + "' unlabeled");
    out += e.utterance_id + " " + std::string(LabelName(e.label)) + "\n";
  }
  WriteFileBytes(path, out);
}

namespace {

template <typename Fn>
void ForEachRecord(const std::filesystem::path& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a >> b) || (fields >> extra))
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected two fields");
    fn(a, b, line_no);
  }
}

}  // namespace

TrialScores ReadScoreFile(const std::filesystem::path& path,
                          const std::map<std::string, Label>* labels) {
  TrialScores scores;
  scores.source = path.stem().string();
  ForEachRecord(path, [&](const std::string& id, const std::string& value, int line_no) {
    TrialScore e{id, 0.0, Label::kUnknown};
    std::size_t used = 0;
    try {
      e.score = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": bad score '" + value + "'");
    if (labels != nullptr) {
      auto it = labels->find(id);
      if (it == labels->end())
        throw DataError("no label for '" + id + "' from " + path.string());
      e.label = it->second;
    }
    scores.entries.push_back(std::move(e));
  });
  scores.Validate();
  return scores;
}

std::map<std::string, Label> ReadLabelFile(const std::filesystem::path& path) {
  std::map<std::string, Label> labels;
  ForEachRecord(path, [&](const std::string& id, const std::string& token, int line_no) {
    Label label;
    try {
      label = ParseLabel(token);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!labels.emplace(id, label).second)
      throw DataError("duplicate utterance id '" + id + "' in " + path.string());
  });
  return labels;
}

TrialScores RoundToFilePrecision(TrialScores scores) {
  for (auto& e : scores.entries)
    e.score = std::stod(fmt::format("{:.6f}", e.score));
  return scores;
}

}  // namespace subcm
