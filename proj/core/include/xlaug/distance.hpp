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

#include <cmath>
#include <cstddef>
#include <span>

namespace xlaug {

// All distance arithmetic is float64 over float32 storage.

/// Unchecked squared L2; callers guarantee equal lengths.
inline double squared_l2_unchecked(const float* a, const float* b, std::size_t n) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    const double d1 = static_cast<double>(a[i + 1]) - static_cast<double>(b[i + 1]);
    const double d2 = static_cast<double>(a[i + 2]) - static_cast<double>(b[i + 2]);
    const double d3 = static_cast<double>(a[i + 3]) - static_cast<double>(b[i + 3]);
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

double squared_l2(std::span<const float> u, std::span<const float> v);

/// ||u - v||_2. Throws DimMismatch.
double euclidean(std::span<const float> u, std::span<const float> v);

double dot(std::span<const float> u, std::span<const float> v);

double norm(std::span<const float> u);

/// dot(u, v) / (||u|| ||v||). Throws DimMismatch, ZeroVector.
double cosine(std::span<const float> u, std::span<const float> v);

}  // namespace xlaug
