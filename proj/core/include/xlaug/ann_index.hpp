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

// Euclidean HNSW index over a PoolView, plus the exact brute-force search it
// is checked against.
//
// Graph degree: upper levels keep at most max_neighbors links per node,
// level 0 keeps at most 2 * max_neighbors (the hnswlib convention).
// Nodes are inserted in ascending row order and levels are drawn from a
// seeded exponential distribution with multiplier 1 / ln(max_neighbors), so
// a build is a pure function of (view, params).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "xlaug/pool_store.hpp"

namespace xlaug {

struct HnswParams {
  std::size_t max_neighbors = 128;
  std::size_t ef_construction = 200;
  std::size_t ef_search = 128;
  std::uint64_t rng_seed = 42;
  // Views smaller than this are searched exhaustively. 0 forces graph search.
  std::size_t exact_below = 2000;

  void validate() const;

  friend bool operator==(const HnswParams&, const HnswParams&) = default;
};

struct Neighbor {
  std::size_t row = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ascending (distance, row).
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.row < b.row);
}

/// Exact top-k by Euclidean distance, ties broken by ascending row.
std::vector<Neighbor> brute_force_search(const PoolView& view, std::span<const float> query,
                                         std::size_t k);

class AnnIndex {
 public:
  /// Throws EmptyView, InvalidArgument (bad params), NonFiniteVector.
  static AnnIndex build(const PoolView& view, const HnswParams& params);

  AnnIndex(AnnIndex&&) noexcept;
  AnnIndex& operator=(AnnIndex&&) noexcept;
  ~AnnIndex();

  /// Up to k neighbors sorted by (distance, row). `ef_search` overrides the
  /// build-time default; the effective beam is max(ef_search, k).
  /// Safe to call concurrently.
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k,
                               std::optional<std::size_t> ef_search = std::nullopt) const;

  const PoolView& view() const noexcept { return view_; }
  const HnswParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return view_.size(); }
  std::size_t dim() const noexcept { return view_.pool().dim(); }

  std::size_t max_level() const noexcept { return max_level_; }
  std::size_t node_level(std::size_t node) const { return levels_[node]; }
  /// Links of internal node `node` (node i is view row i) at `level`.
  std::span<const std::uint32_t> links(std::size_t node, std::size_t level) const;
  std::size_t max_links(std::size_t level) const noexcept {
    return level == 0 ? 2 * params_.max_neighbors : params_.max_neighbors;
  }

  /// Structural equality of the graph (same view rows, levels and links).
  bool same_graph(const AnnIndex& other) const;

  /// Persists params, the view's rows, and the graph. `source_checksum`
  /// identifies the vector file the index was built from.
  void save(const std::filesystem::path& path, std::uint32_t source_checksum) const;

  /// Throws StaleIndex if the stored checksum differs from `source_checksum`
  /// or the stored rows do not fit `pool`.
  static AnnIndex load(const std::filesystem::path& path, const Pool& pool,
                       std::uint32_t source_checksum);

 private:
  struct VisitedPool;

  AnnIndex(PoolView view, HnswParams params);

  std::span<const float> node_vector(std::uint32_t node) const {
    return view_.pool().vector(view_.rows()[node]);
  }
  double node_distance(std::span<const float> query, std::uint32_t node) const;

  void insert(std::uint32_t node, std::size_t level);
  std::uint32_t greedy_descend(std::span<const float> query, std::uint32_t entry,
                               std::size_t from_level, std::size_t to_level) const;
  struct Candidate;
  std::vector<Candidate> search_level(std::span<const float> query,
                                      std::span<const Candidate> entries, std::size_t ef,
                                      std::size_t level) const;
  std::vector<Candidate> select_neighbors(std::vector<Candidate> candidates,
                                          std::size_t limit) const;
  std::vector<std::uint32_t>& link_list(std::size_t node, std::size_t level);

  PoolView view_;
  HnswParams params_;
  std::vector<std::uint8_t> levels_;
  std::vector<std::vector<std::uint32_t>> base_links_;                // level 0
  std::vector<std::vector<std::vector<std::uint32_t>>> upper_links_;  // [node][level-1]
  std::uint32_t entry_point_ = 0;
  std::size_t max_level_ = 0;
  std::unique_ptr<VisitedPool> visited_;
};

/// CRC-32 of a file's bytes; used to tie a persisted index to its vectors.
std::uint32_t file_checksum(const std::filesystem::path& path);

}  // namespace xlaug
