// subcm/common.hpp

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

#ifndef SUBCM_COMMON_HPP_
#define SUBCM_COMMON_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace subcm {

/// Base class of every error raised by the library. The CLI maps the
/// subclasses below onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, unsupported parameter or broken contract between
/// artifacts (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, malformed or inconsistent input data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss (exit code 4).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Class of a trial. Bonafide is the positive class; detection scores are
/// bonafide posteriors, so higher means "more likely bonafide".
enum class Label { kBonafide, kSpoof, kUnknown };

std::string_view LabelName(Label label);

/// Accepts exactly "bonafide", "spoof" or "unknown"; anything else throws
/// DataError("unknown label ...").
Label ParseLabel(std::string_view token);

}  // namespace subcm

#endif  // SUBCM_COMMON_HPP_
