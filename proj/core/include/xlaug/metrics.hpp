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

#include <span>

namespace xlaug {

/// Mean of the per-class F1 over classes {0, 1}. A zero denominator in
/// precision, recall or F1 makes that quantity 0. Throws LengthMismatch,
/// EmptyData.
double f1_macro(std::span<const int> predicted, std::span<const int> actual);

}  // namespace xlaug
