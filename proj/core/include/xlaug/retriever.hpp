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

// Retrieval set construction: per-query top-k over the source pool, union
// across queries, exact-text dedup, and top-up until exactly R unique texts
// remain. Optional per-query MMR diversity selection.
//
// Plain path, for m queries and target size R:
//   k = k_init (default ceil(R / m))
//   loop:
//     gather each query's top-k, drop excluded rows
//     dedup by byte-equal text, keeping the occurrence with the smallest
//       (distance, row); query index breaks remaining ties
//     if at least R unique texts: stop
//     if k already covers the whole view: Shortfall
//     k = 2k
//   order unique texts by (distance, row) and keep the first R

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlaug/ann_index.hpp"
#include "xlaug/distance.hpp"
#include "xlaug/pool_store.hpp"

namespace xlaug {

struct MmrConfig {
  double lambda = 0.5;
  std::size_t candidate_multiplier = 2;

  void validate() const;
};

struct RetrievalConfig {
  std::size_t total_r = 1;
  std::set<std::string> exclude_languages;
  std::set<std::string> exclude_tasks;
  std::optional<MmrConfig> mmr;
  std::optional<std::size_t> k_init;

  void validate() const;
};

struct Provenance {
  std::size_t query_index = 0;
  std::size_t rank = 0;  // 0-based position in that query's neighbor list
  double distance = 0.0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct RetrievedItem {
  std::size_t row = 0;
  Instance instance;
  Provenance provenance;

  friend bool operator==(const RetrievedItem&, const RetrievedItem&) = default;
};

struct RetrievedSet {
  std::vector<RetrievedItem> items;
  RetrievalConfig config;
  std::size_t final_k = 0;  // per-query k of the last round
  std::size_t rounds = 0;
};

/// Per-query top-k lists; element i belongs to queries.row(i).
std::vector<std::vector<Neighbor>> topk_union(const AnnIndex& index, const VectorBlock& queries,
                                              std::size_t k);

/// Greedy maximal marginal relevance. First pick is the candidate with the
/// highest cosine to `query`; each later pick maximizes
///   lambda * cos(v, query) - (1 - lambda) * max_{s selected} cos(v, s).
/// Score ties go to the lower row. Returns rows in selection order.
/// Throws ZeroVector, KTooLarge, InvalidArgument (lambda outside [0, 1]).
std::vector<std::size_t> mmr_select(
    std::span<const float> query,
    std::span<const std::pair<std::size_t, std::span<const float>>> candidates, std::size_t k,
    double lambda);

/// Throws Shortfall (index() = achieved unique count), DimMismatch,
/// InvalidArgument.
RetrievedSet retrieve(const AnnIndex& index, const Pool& pool, const VectorBlock& targets,
                      const RetrievalConfig& config);

/// Manifest records plus `src_row`, `query_index`, `rank`, `distance`.
void write_retrieved(const RetrievedSet& set, const std::filesystem::path& path);

}  // namespace xlaug
