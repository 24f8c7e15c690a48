// subcm/hash.hpp

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

#ifndef SUBCM_HASH_HPP_
#define SUBCM_HASH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace subcm {

std::string Sha256Hex(std::string_view bytes);

/// Git object id of `bytes` stored as a blob: sha1("blob <size>\0" + bytes).
std::string GitBlobHash(std::string_view bytes);

/// Whole-file read; throws DataError when the file cannot be opened.
std::string ReadFileBytes(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename.
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

/// Seed for one purpose ("init", "shuffle", "dropout", ...) of a seeded
/// computation, so that random streams never overlap.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view purpose,
                         std::uint64_t index = 0);

}  // namespace subcm

#endif  // SUBCM_HASH_HPP_
