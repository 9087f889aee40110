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

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "oracles/oracles.hpp"
#include "support/fixtures.hpp"
#include "xlaug/distance.hpp"
#include "xlaug/error.hpp"
#include "xlaug/retriever.hpp"

namespace xlaug {
namespace {

using V = std::vector<float>;

Pool line_pool(const std::vector<std::pair<std::string, float>>& rows) {
  Pool pool;
  for (const auto& [text, x] : rows) pool.add({0, text, 0, "en", "t_en"}, V{x, 0.0f});
  return pool;
}

VectorBlock block_of(std::initializer_list<V> rows) {
  VectorBlock block(rows.begin()->size());
  for (const V& r : rows) block.append(r);
  return block;
}

std::vector<std::size_t> rows_of(const RetrievedSet& set) {
  std::vector<std::size_t> out;
  for (const auto& item : set.items) out.push_back(item.row);
  return out;
}

TEST(TopkUnion, SingleQueryKOne) {
  const Pool pool = line_pool({{"a", 4}, {"b", 1}, {"c", 9}});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  const auto lists = topk_union(index, block_of({{0, 0}}), 1);
  ASSERT_EQ(lists.size(), 1u);
  EXPECT_EQ(lists[0], (std::vector<Neighbor>{{1, 1.0}}));
}

TEST(TopkUnion, IdenticalQueriesIdenticalLists) {
  const Pool pool = testing::random_pool(1, {.rows = 60, .dim = 4});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  const VectorBlock q = block_of({{0.1f, 0.2f, 0.3f, 0.4f}, {0.1f, 0.2f, 0.3f, 0.4f}});
  const auto lists = topk_union(index, q, 7);
  EXPECT_EQ(lists[0], lists[1]);
}

TEST(TopkUnion, MatchesPerQueryOracle) {
  const Pool pool = testing::random_pool(2, {.rows = 10, .dim = 3});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  const VectorBlock q = testing::random_vectors(3, 3, 3);
  const auto lists = topk_union(index, q, 2);
  std::set<std::size_t> unioned;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto want = oracle::topk(pool, index.view().rows(), q.row(i), 2);
    ASSERT_EQ(lists[i].size(), 2u);
    for (std::size_t r = 0; r < 2; ++r) {
      EXPECT_EQ(lists[i][r].row, want[r].row);
      unioned.insert(lists[i][r].row);
    }
  }
  EXPECT_LE(unioned.size(), 6u);
}

TEST(Retrieve, ExhaustiveOrderedByDistance) {
  const Pool pool = line_pool({{"a", 5}, {"b", 2}, {"c", 4}, {"d", 1}, {"e", 3}});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  RetrievalConfig config;
  config.total_r = 5;
  const auto set = retrieve(index, pool, block_of({{0, 0}}), config);
  EXPECT_EQ(rows_of(set), (std::vector<std::size_t>{3, 1, 4, 2, 0}));
  EXPECT_EQ(set.items[0].provenance, (Provenance{0, 0, 1.0}));
}

TEST(Retrieve, DuplicateTextKeepsNearerAndTopsUp) {
  const Pool pool = line_pool({{"same", 1}, {"same", 2}, {"third", 3}, {"fourth", 4}});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  RetrievalConfig config;
  config.total_r = 2;
  const auto set = retrieve(index, pool, block_of({{0, 0}}), config);
  EXPECT_EQ(rows_of(set), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(set.rounds, 2u);
  EXPECT_EQ(set.final_k, 4u);
}

TEST(Retrieve, MatchesStraightLineOracle) {
  const Pool pool = testing::random_pool(4, {.rows = 50, .dim = 6, .duplicate_text_rate = 0.2});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  const VectorBlock q = testing::random_vectors(5, 4, 6);
  RetrievalConfig config;
  config.total_r = 10;
  config.k_init = 3;
  const auto set = retrieve(index, pool, q, config);
  const auto want = oracle::retrieve(pool, index.view().rows(), q, 10, {}, {}, 3);
  ASSERT_TRUE(want.has_value());
  ASSERT_EQ(set.items.size(), want->size());
  std::set<std::string> texts;
  for (std::size_t i = 0; i < want->size(); ++i) {
    EXPECT_EQ(set.items[i].row, (*want)[i].row);
    EXPECT_EQ(set.items[i].provenance.query_index, (*want)[i].query);
    EXPECT_EQ(set.items[i].provenance.rank, (*want)[i].rank);
    texts.insert(set.items[i].instance.text);
  }
  EXPECT_EQ(texts.size(), 10u);
}

TEST(Retrieve, ShortfallReportsAchievedCount) {
  const Pool pool = line_pool({{"x", 1}, {"x", 2}, {"y", 3}});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  RetrievalConfig config;
  config.total_r = 3;
  try {
    retrieve(index, pool, block_of({{0, 0}}), config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShortfall);
    EXPECT_EQ(e.index(), 2u);
  }
}

TEST(Retrieve, ExclusionsNeverLeak) {
  const Pool pool = testing::random_pool(6, {.rows = 400, .dim = 5});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  RetrievalConfig config;
  config.total_r = 40;
  config.exclude_languages = {"tr"};
  config.exclude_tasks = {"Dyn21_en"};
  const auto set = retrieve(index, pool, testing::random_vectors(7, 3, 5), config);
  EXPECT_EQ(set.items.size(), 40u);
  for (const auto& item : set.items) {
    EXPECT_NE(item.instance.language, "tr");
    EXPECT_NE(item.instance.source_task, "Dyn21_en");
  }
}

TEST(Retrieve, ExcludingEverythingIsShortfall) {
  const Pool pool = testing::random_pool(8, {.rows = 30, .dim = 3});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  RetrievalConfig config;
  config.total_r = 1;
  config.exclude_languages = {"en", "tr", "de", "es", "it"};
  try {
    retrieve(index, pool, testing::random_vectors(9, 1, 3), config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShortfall);
    EXPECT_EQ(e.index(), 0u);
  }
}

TEST(Retrieve, RejectsForeignPoolAndBadDims) {
  const Pool pool = testing::random_pool(10, {.rows = 20, .dim = 3});
  const Pool other = testing::random_pool(10, {.rows = 20, .dim = 3});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  RetrievalConfig config;
  config.total_r = 2;
  EXPECT_THROW(retrieve(index, other, testing::random_vectors(1, 1, 3), config), Error);
  try {
    retrieve(index, pool, testing::random_vectors(1, 1, 4), config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimMismatch);
  }
  config.total_r = 0;
  EXPECT_THROW(retrieve(index, pool, testing::random_vectors(1, 1, 3), config), Error);
}

Pool unit_pool(std::uint64_t seed, std::size_t rows, std::size_t dim) {
  const Pool raw = testing::random_pool(seed, {.rows = rows, .dim = dim});
  Pool pool;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    V v(raw.vector(i).begin(), raw.vector(i).end());
    const float n = static_cast<float>(norm(v));
    for (float& x : v) x /= n;
    pool.add(raw.instances[i], v);
  }
  return pool;
}

TEST(Retrieve, MmrWithLambdaOneKeepsTheSameSetOnUnitVectors) {
  // On the unit sphere Euclidean order and cosine order coincide.
  const Pool pool = unit_pool(11, 300, 6);
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  const VectorBlock q = block_of({{pool.vector(7).begin(), pool.vector(7).end()}});
  RetrievalConfig plain;
  plain.total_r = 15;
  RetrievalConfig diverse = plain;
  diverse.mmr = MmrConfig{1.0, 2};
  auto a = rows_of(retrieve(index, pool, q, plain));
  auto b = rows_of(retrieve(index, pool, q, diverse));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(Retrieve, MmrSelectionsAreUniqueAndClean) {
  const Pool pool = testing::random_pool(13, {.rows = 500, .dim = 6, .duplicate_text_rate = 0.3});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  RetrievalConfig config;
  config.total_r = 25;
  config.exclude_tasks = {"Ken20_en"};
  config.mmr = MmrConfig{0.5, 2};
  const auto set = retrieve(index, pool, testing::random_vectors(14, 4, 6), config);
  std::set<std::string> texts;
  for (const auto& item : set.items) {
    texts.insert(item.instance.text);
    EXPECT_NE(item.instance.source_task, "Ken20_en");
  }
  EXPECT_EQ(texts.size(), 25u);
}

TEST(Retrieve, DeterministicAcrossCalls) {
  const Pool pool = testing::random_pool(15, {.rows = 3000, .dim = 8, .duplicate_text_rate = 0.1});
  HnswParams params;
  params.max_neighbors = 16;
  params.ef_construction = 64;
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), params);
  RetrievalConfig config;
  config.total_r = 60;
  const VectorBlock q = testing::random_vectors(16, 5, 8);
  EXPECT_EQ(retrieve(index, pool, q, config).items, retrieve(index, pool, q, config).items);
}

TEST(WriteRetrieved, CarriesProvenance) {
  testing::TempDir dir("ret");
  const Pool pool = line_pool({{"a", 1}, {"b", 2}});
  const AnnIndex index = AnnIndex::build(PoolView::all(pool), {});
  RetrievalConfig config;
  config.total_r = 2;
  write_retrieved(retrieve(index, pool, block_of({{0, 0}}), config), dir / "r.jsonl");
  const auto instances = read_manifest(dir / "r.jsonl");
  ASSERT_EQ(instances.size(), 2u);
  EXPECT_EQ(instances[1].text, "b");
  const std::string text = testing::slurp(dir / "r.jsonl");
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(first.at("src_row"), 0);
  EXPECT_EQ(first.at("rank"), 0);
  EXPECT_EQ(first.at("distance"), 1.0);
}

}  // namespace
}  // namespace xlaug
