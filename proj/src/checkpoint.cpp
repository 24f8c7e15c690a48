// subcm/checkpoint.cpp

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

#include "subcm/checkpoint.hpp"

#include <cstring>
#include <map>

#include "subcm/common.hpp"
#include "subcm/hash.hpp"

namespace subcm {
namespace {

constexpr char kMagic[4] = {'S', 'C', 'M', 'W'};
constexpr std::uint32_t kVersion = 1;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string_view Bytes(std::size_t n) {
    Need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError("truncated weights file");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string EncodeWeights(Classifier<float>& model) {
  auto state = model.State();
  std::string out(kMagic, 4);
  PutU32(out, kVersion);
  PutU32(out, static_cast<std::uint32_t>(state.size()));
  for (const auto& e : state) {
    PutU32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    for (int d : e.tensor->shape) PutU32(out, static_cast<std::uint32_t>(d));
    for (float v : e.tensor->data) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      PutU32(out, bits);
    }
  }
  return out;
}

void DecodeWeights(std::string_view bytes, Classifier<float>& model) {
  Reader r(bytes);
  if (r.Bytes(4) != std::string_view(kMagic, 4))
    throw DataError("weights file has a bad magic number");
  if (r.U32() != kVersion) throw DataError("unsupported weights version");
  auto state = model.State();
  std::map<std::string, nn::Tensor<float>*> by_name;
  for (auto& e : state) by_name[e.name] = e.tensor;
  const std::uint32_t count = r.U32();
  if (count != state.size())
    throw ConfigError("architecture mismatch: weights hold " +
                      std::to_string(count) + " tensors, model expects " +
                      std::to_string(state.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name(r.Bytes(r.U32()));
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw ConfigError("architecture mismatch: unexpected tensor " + name);
    nn::Tensor<float>& t = *it->second;
    for (int d = 0; d < 4; ++d)
      if (static_cast<int>(r.U32()) != t.shape[d])
        throw ConfigError("architecture mismatch: shape of " + name);
    for (float& v : t.data) {
      std::uint32_t bits = r.U32();
      std::memcpy(&v, &bits, 4);
    }
    by_name.erase(it);
  }
  if (!r.AtEnd()) throw DataError("trailing bytes in weights file");
}

CheckpointManifest Save(Classifier<float>& model, CheckpointManifest manifest,
                        const std::filesystem::path& dir) {
  const std::string weights = EncodeWeights(model);
  manifest.weights_hash = GitBlobHash(weights);
  std::filesystem::create_directories(dir);
  WriteFileBytes(dir / "weights", weights);
  WriteFileBytes(dir / "manifest", manifest.ToJson().dump(2) + "\n");
  return manifest;
}

}  // namespace

nlohmann::json CheckpointManifest::ToJson() const {
  nlohmann::json bands = nlohmann::json::array();
  for (std::size_t i = 0; i < band_configs.size(); ++i)
    bands.push_back({{"band_index", band_indices.at(i)},
                     {"architecture", band_configs[i].ToJson()}});
  return {{"format", "subcm-checkpoint-1"},
          {"kind", kind == Kind::kSubCnn ? "sub_cnn" : "joint"},
          {"model_id", model_id},
          {"plan_n", plan_n},
          {"bands", bands},
          {"frontend", frontend},
          {"seed", seed},
          {"weights_hash", weights_hash},
          {"training", training}};
}

CheckpointManifest CheckpointManifest::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("format") != "subcm-checkpoint-1")
      throw DataError("unknown checkpoint format");
    CheckpointManifest m;
    const std::string kind = j.at("kind");
    if (kind == "sub_cnn") m.kind = Kind::kSubCnn;
    else if (kind == "joint") m.kind = Kind::kJoint;
    else throw DataError("unknown checkpoint kind " + kind);
    m.model_id = j.at("model_id");
    m.plan_n = j.at("plan_n");
    for (const auto& b : j.at("bands")) {
      m.band_indices.push_back(b.at("band_index"));
      m.band_configs.push_back(SubCnnConfig::FromJson(b.at("architecture")));
    }
    m.frontend = j.at("frontend");
    m.seed = j.at("seed");
    m.weights_hash = j.at("weights_hash");
    m.training = j.value("training", nlohmann::json::object());
    if (m.band_configs.empty() ||
        (m.kind == Kind::kSubCnn && m.band_configs.size() != 1))
      throw DataError("checkpoint manifest has an invalid band list");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint manifest: ") + e.what());
  }
}

Classifier<float>& Checkpoint::classifier() {
  return std::visit([](auto& m) -> Classifier<float>& { return m; }, model);
}

CheckpointManifest SaveCheckpoint(SubCnn& model, CheckpointManifest manifest,
                                  const std::filesystem::path& dir) {
  manifest.kind = CheckpointManifest::Kind::kSubCnn;
  manifest.band_configs = {model.config()};
  if (manifest.band_indices.size() != 1) manifest.band_indices = {0};
  return Save(model, std::move(manifest), dir);
}

CheckpointManifest SaveCheckpoint(JointModel& model, CheckpointManifest manifest,
                                  const std::filesystem::path& dir) {
  manifest.kind = CheckpointManifest::Kind::kJoint;
  manifest.band_configs = model.band_configs();
  manifest.band_indices = model.band_indices();
  manifest.plan_n = model.plan_n();
  return Save(model, std::move(manifest), dir);
}

CheckpointManifest ReadManifest(const std::filesystem::path& dir) {
  const std::string text = ReadFileBytes(dir / "manifest");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt checkpoint manifest in " + dir.string() + ": " +
                    e.what());
  }
  return CheckpointManifest::FromJson(j);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& dir) {
  CheckpointManifest manifest = ReadManifest(dir);
  const std::string weights = ReadFileBytes(dir / "weights");
  if (GitBlobHash(weights) != manifest.weights_hash)
    throw DataError("weights hash mismatch in " + dir.string());
  if (manifest.kind == CheckpointManifest::Kind::kSubCnn) {
    SubCnn model(manifest.band_configs.front(), 0);
    DecodeWeights(weights, model);
    return Checkpoint{std::move(manifest), std::move(model)};
  }
  std::vector<SubCnn> subs;
  for (const auto& c : manifest.band_configs) subs.emplace_back(c, 0);
  JointModel joint(subs, manifest.band_indices, manifest.plan_n, true, 0);
  DecodeWeights(weights, joint);
  return Checkpoint{std::move(manifest), std::move(joint)};
}

}  // namespace subcm
