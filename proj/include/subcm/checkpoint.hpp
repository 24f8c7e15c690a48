// subcm/checkpoint.hpp

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

#ifndef SUBCM_CHECKPOINT_HPP_
#define SUBCM_CHECKPOINT_HPP_

// A checkpoint is a directory holding
//   manifest  JSON: architecture, front-end parameters, seed, weights hash
//   weights   binary tensor container ("SCMW", version 1, little endian)
// The manifest is the compatibility contract; the weights hash is the git
// blob id of the weights file and is verified on load.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "subcm/models.hpp"

namespace subcm {

struct CheckpointManifest {
  enum class Kind { kSubCnn, kJoint };

  Kind kind = Kind::kSubCnn;
  std::string model_id;
  int plan_n = 1;
  std::vector<int> band_indices;          // one entry per embedding stage
  std::vector<SubCnnConfig> band_configs;  // idem
  std::string frontend;                    // FrontendConfig::ToString()
  std::uint64_t seed = 0;
  std::string weights_hash;
  nlohmann::json training = nlohmann::json::object();

  nlohmann::json ToJson() const;
  static CheckpointManifest FromJson(const nlohmann::json& j);
};

struct Checkpoint {
  CheckpointManifest manifest;
  std::variant<SubCnn, JointModel> model;

  Classifier<float>& classifier();
};

/// Serializes `model` into `dir` (created if needed). The manifest's kind,
/// configs, band indices and weights hash are filled in from the model.
CheckpointManifest SaveCheckpoint(SubCnn& model, CheckpointManifest manifest,
                                  const std::filesystem::path& dir);
CheckpointManifest SaveCheckpoint(JointModel& model,
                                  CheckpointManifest manifest,
                                  const std::filesystem::path& dir);

/// Throws DataError on a missing/corrupt file or hash mismatch and
/// ConfigError when the weights do not fit the manifest architecture.
Checkpoint LoadCheckpoint(const std::filesystem::path& dir);

CheckpointManifest ReadManifest(const std::filesystem::path& dir);

}  // namespace subcm

#endif  // SUBCM_CHECKPOINT_HPP_
