// Copyright 2026 The xlaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "xlaug/error.hpp"

namespace xlaug {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIoFailure: return "IoFailure";
    case ErrorKind::kCountMismatch: return "CountMismatch";
    case ErrorKind::kBadHeader: return "BadHeader";
    case ErrorKind::kNonFiniteVector: return "NonFiniteVector";
    case ErrorKind::kMalformedRecord: return "MalformedRecord";
    case ErrorKind::kEmptyView: return "EmptyView";
    case ErrorKind::kDimMismatch: return "DimMismatch";
    case ErrorKind::kZeroVector: return "ZeroVector";
    case ErrorKind::kKTooLarge: return "KTooLarge";
    case ErrorKind::kShortfall: return "Shortfall";
    case ErrorKind::kEmptyData: return "EmptyData";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kStaleIndex: return "StaleIndex";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      index_(index) {}

}  // namespace xlaug
