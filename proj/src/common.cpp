// subcm/common.cpp

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

#include "subcm/common.hpp"

namespace subcm {

std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kBonafide: return "bonafide";
    case Label::kSpoof: return "spoof";
    case Label::kUnknown: return "unknown";
  }
  return "unknown";
}

Label ParseLabel(std::string_view token) {
  if (token == "bonafide") return Label::kBonafide;
  if (token == "spoof") return Label::kSpoof;
  if (token == "unknown") return Label::kUnknown;
  throw DataError("unknown label '" + std::string(token) + "'");
}

}  // namespace subcm
