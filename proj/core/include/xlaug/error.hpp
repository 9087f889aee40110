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
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xlaug {

enum class ErrorKind {
  kIoFailure,
  kCountMismatch,
  kBadHeader,
  kNonFiniteVector,
  kMalformedRecord,
  kEmptyView,
  kDimMismatch,
  kZeroVector,
  kKTooLarge,
  kShortfall,
  kEmptyData,
  kLengthMismatch,
  kInsufficientData,
  kInvalidArgument,
  kStaleIndex,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `index()` carries the offending row,
/// line number or achieved count, depending on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace xlaug
