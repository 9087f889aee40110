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
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles/oracles.hpp"
#include "support/fixtures.hpp"
#include "xlaug/distance.hpp"
#include "xlaug/error.hpp"

namespace xlaug {
namespace {

using V = std::vector<float>;

TEST(Euclidean, PythagoreanTriple) { EXPECT_EQ(euclidean(V{0, 0}, V{3, 4}), 5.0); }

TEST(Euclidean, Identity) {
  const V u = {1.5f, -2.25f, 7.0f};
  EXPECT_EQ(euclidean(u, u), 0.0);
}

TEST(Euclidean, DimMismatch) {
  EXPECT_THROW(euclidean(V{1, 2}, V{1, 2, 3}), Error);
}

TEST(Euclidean, MatchesCompensatedOracleAt1024Dims) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const VectorBlock block = testing::random_vectors(seed, 2, 1024);
    const double got = euclidean(block.row(0), block.row(1));
    const double want = oracle::euclidean(block.row(0), block.row(1));
    EXPECT_LE(std::fabs(got - want), 1e-9 * want) << "seed " << seed;
  }
}

TEST(Euclidean, OddLengthsUseTheTail) {
  const V u = {1, 2, 3, 4, 5, 6, 7};
  const V v = {0, 0, 0, 0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(euclidean(u, v), std::sqrt(140.0));
}

TEST(Cosine, Orthogonal) { EXPECT_EQ(cosine(V{1, 0}, V{0, 1}), 0.0); }
TEST(Cosine, ParallelIsScaleInvariant) { EXPECT_DOUBLE_EQ(cosine(V{2, 0}, V{5, 0}), 1.0); }
TEST(Cosine, Antiparallel) { EXPECT_DOUBLE_EQ(cosine(V{1, 0}, V{-3, 0}), -1.0); }

TEST(Cosine, ZeroVector) {
  try {
    cosine(V{0, 0}, V{1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kZeroVector);
  }
}

}  // namespace
}  // namespace xlaug
