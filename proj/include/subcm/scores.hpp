// subcm/scores.hpp

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

#ifndef SUBCM_SCORES_HPP_
#define SUBCM_SCORES_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "subcm/common.hpp"

namespace subcm {

struct TrialScore {
  std::string utterance_id;
  double score = 0.0;
  Label label = Label::kUnknown;
};

/// Per-utterance detection scores of one system (a model or a fusion).
struct TrialScores {
  std::string source;
  std::vector<TrialScore> entries;

  /// Unique ids and finite scores; throws DataError otherwise.
  void Validate() const;

  std::size_t Count(Label label) const;
  std::vector<double> ScoresOf(Label label) const;
  std::map<std::string, Label> Labels() const;
};

/// "utterance_id score" per line, score with 6 decimals.
void WriteScoreFile(const TrialScores& scores, const std::filesystem::path& path);
/// "utterance_id {bonafide|spoof}" per line.
void WriteLabelFile(const TrialScores& scores, const std::filesystem::path& path);

/// Reads a score file; labels are kUnknown unless `labels` is given, in
/// which case every id must be present there.
TrialScores ReadScoreFile(const std::filesystem::path& path,
                          const std::map<std::string, Label>* labels = nullptr);
std::map<std::string, Label> ReadLabelFile(const std::filesystem::path& path);

/// Rounds scores to the 6 decimals a score file keeps, so that metrics
/// computed in memory equal metrics recomputed from the written file.
TrialScores RoundToFilePrecision(TrialScores scores);

}  // namespace subcm

#endif  // SUBCM_SCORES_HPP_
