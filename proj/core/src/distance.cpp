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
#include "xlaug/distance.hpp"

#include <string>

#include "xlaug/error.hpp"

namespace xlaug {
namespace {

void check_dims(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kDimMismatch,
                "dims " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
}

}  // namespace

double squared_l2(std::span<const float> u, std::span<const float> v) {
  check_dims(u, v);
  return squared_l2_unchecked(u.data(), v.data(), u.size());
}

double euclidean(std::span<const float> u, std::span<const float> v) {
  return std::sqrt(squared_l2(u, v));
}

double dot(std::span<const float> u, std::span<const float> v) {
  check_dims(u, v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  }
  return s;
}

double norm(std::span<const float> u) {
  double s = 0.0;
  for (float x : u) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

double cosine(std::span<const float> u, std::span<const float> v) {
  check_dims(u, v);
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorKind::kZeroVector, "cosine of a zero vector");
  return dot(u, v) / (nu * nv);
}

}  // namespace xlaug
