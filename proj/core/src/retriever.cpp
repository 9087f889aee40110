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
#include "xlaug/retriever.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "xlaug/error.hpp"

namespace xlaug {
namespace {

struct Occurrence {
  std::size_t row;
  Provenance provenance;
};

bool occurrence_less(const Occurrence& a, const Occurrence& b) {
  if (a.provenance.distance != b.provenance.distance) {
    return a.provenance.distance < b.provenance.distance;
  }
  if (a.row != b.row) return a.row < b.row;
  return a.provenance.query_index < b.provenance.query_index;
}

// Unique texts with their best occurrence.
class DedupSet {
 public:
  explicit DedupSet(const Pool& pool) : pool_(pool) {}

  void offer(const Occurrence& occ) {
    const std::string_view text = pool_.instances[occ.row].text;
    auto [it, inserted] = best_.try_emplace(text, occ);
    if (!inserted && occurrence_less(occ, it->second)) it->second = occ;
  }

  std::size_t size() const { return best_.size(); }

  std::vector<Occurrence> ranked() const {
    std::vector<Occurrence> out;
    out.reserve(best_.size());
    for (const auto& [text, occ] : best_) out.push_back(occ);
    std::sort(out.begin(), out.end(), occurrence_less);
    return out;
  }

 private:
  const Pool& pool_;
  std::unordered_map<std::string_view, Occurrence> best_;
};

bool excluded(const Instance& inst, const RetrievalConfig& config) {
  return config.exclude_languages.contains(inst.language) ||
         config.exclude_tasks.contains(inst.source_task);
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t grow(std::size_t k, std::size_t cap) { return k > cap / 2 ? cap : 2 * k; }

RetrievedSet finalize(const Pool& pool, const DedupSet& unique, const RetrievalConfig& config,
                      std::size_t final_k, std::size_t rounds) {
  RetrievedSet set;
  set.config = config;
  set.final_k = final_k;
  set.rounds = rounds;
  auto ranked = unique.ranked();
  ranked.resize(config.total_r);
  set.items.reserve(ranked.size());
  for (const Occurrence& occ : ranked) {
    set.items.push_back({occ.row, pool.instances[occ.row], occ.provenance});
  }
  return set;
}

[[noreturn]] void shortfall(std::size_t achieved, std::size_t wanted) {
  throw Error(ErrorKind::kShortfall,
              "found " + std::to_string(achieved) + " unique texts, wanted " +
                  std::to_string(wanted),
              achieved);
}

RetrievedSet retrieve_plain(const AnnIndex& index, const Pool& pool, const VectorBlock& targets,
                            const RetrievalConfig& config) {
  const std::size_t view_size = index.size();
  std::size_t k = std::min(config.k_init.value_or(ceil_div(config.total_r, targets.count())),
                           view_size);
  for (std::size_t round = 1;; ++round) {
    DedupSet unique(pool);
    const auto lists = topk_union(index, targets, k);
    for (std::size_t q = 0; q < lists.size(); ++q) {
      for (std::size_t rank = 0; rank < lists[q].size(); ++rank) {
        const Neighbor& nb = lists[q][rank];
        if (excluded(pool.instances[nb.row], config)) continue;
        unique.offer({nb.row, {q, rank, nb.distance}});
      }
    }
    if (unique.size() >= config.total_r) return finalize(pool, unique, config, k, round);
    if (k >= view_size) shortfall(unique.size(), config.total_r);
    k = grow(k, view_size);
  }
}

// Up to `want` nearest non-excluded candidates for one query, unique by text.
std::vector<Occurrence> mmr_candidates(const AnnIndex& index, const Pool& pool,
                                       std::span<const float> query, std::size_t query_index,
                                       std::size_t want, const RetrievalConfig& config) {
  const std::size_t view_size = index.size();
  std::size_t k = std::min(want, view_size);
  for (;;) {
    const auto list = index.search(query, k);
    std::vector<Occurrence> out;
    std::unordered_set<std::string_view> seen;
    for (std::size_t rank = 0; rank < list.size() && out.size() < want; ++rank) {
      const Instance& inst = pool.instances[list[rank].row];
      if (excluded(inst, config) || !seen.insert(inst.text).second) continue;
      out.push_back({list[rank].row, {query_index, rank, list[rank].distance}});
    }
    if (out.size() >= want || k >= view_size) return out;
    k = grow(k, view_size);
  }
}

RetrievedSet retrieve_mmr(const AnnIndex& index, const Pool& pool, const VectorBlock& targets,
                          const RetrievalConfig& config) {
  const MmrConfig& mmr = *config.mmr;
  const std::size_t view_size = index.size();
  std::size_t per_query =
      std::min(config.k_init.value_or(ceil_div(config.total_r, targets.count())), view_size);
  for (std::size_t round = 1;; ++round) {
    DedupSet unique(pool);
    for (std::size_t q = 0; q < targets.count(); ++q) {
      const auto query = targets.row(q);
      const auto candidates = mmr_candidates(index, pool, query, q,
                                             per_query * mmr.candidate_multiplier, config);
      if (candidates.empty()) continue;
      std::vector<std::pair<std::size_t, std::span<const float>>> scored;
      scored.reserve(candidates.size());
      for (const Occurrence& c : candidates) scored.emplace_back(c.row, pool.vector(c.row));
      const auto picks =
          mmr_select(query, scored, std::min(per_query, candidates.size()), mmr.lambda);
      for (std::size_t row : picks) {
        const auto it = std::find_if(candidates.begin(), candidates.end(),
                                     [row](const Occurrence& c) { return c.row == row; });
        unique.offer(*it);
      }
    }
    if (unique.size() >= config.total_r) return finalize(pool, unique, config, per_query, round);
    if (per_query >= view_size) shortfall(unique.size(), config.total_r);
    per_query = grow(per_query, view_size);
  }
}

}  // namespace

void MmrConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "MMR lambda must lie in [0, 1]");
  }
  if (candidate_multiplier < 2) {
    throw Error(ErrorKind::kInvalidArgument, "MMR candidate multiplier must be >= 2");
  }
}

void RetrievalConfig::validate() const {
  if (total_r < 1) throw Error(ErrorKind::kInvalidArgument, "total_r must be >= 1");
  if (k_init && *k_init < 1) throw Error(ErrorKind::kInvalidArgument, "k_init must be >= 1");
  if (mmr) mmr->validate();
}

std::vector<std::vector<Neighbor>> topk_union(const AnnIndex& index, const VectorBlock& queries,
                                              std::size_t k) {
  if (queries.count() == 0) throw Error(ErrorKind::kEmptyData, "no queries");
  if (queries.dim() != index.dim()) {
    throw Error(ErrorKind::kDimMismatch, "query dim " + std::to_string(queries.dim()) +
                                             " vs index dim " + std::to_string(index.dim()));
  }
  std::vector<std::vector<Neighbor>> lists(queries.count());
  for (std::size_t q = 0; q < queries.count(); ++q) lists[q] = index.search(queries.row(q), k);
  return lists;
}

std::vector<std::size_t> mmr_select(
    std::span<const float> query,
    std::span<const std::pair<std::size_t, std::span<const float>>> candidates, std::size_t k,
    double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "lambda must lie in [0, 1]");
  }
  if (k > candidates.size()) {
    throw Error(ErrorKind::kKTooLarge, "k = " + std::to_string(k) + " but only " +
                                           std::to_string(candidates.size()) + " candidates");
  }
  const std::size_t n = candidates.size();
  const double query_norm = norm(query);
  if (query_norm == 0.0) throw Error(ErrorKind::kZeroVector, "query is a zero vector");
  std::vector<double> norms(n);
  std::vector<double> relevance(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = candidates[i].second;
    norms[i] = norm(v);
    if (norms[i] == 0.0) {
      throw Error(ErrorKind::kZeroVector,
                  "candidate row " + std::to_string(candidates[i].first) + " is a zero vector",
                  candidates[i].first);
    }
    relevance[i] = dot(v, query) / (norms[i] * query_norm);
  }

  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::vector<bool> taken(n, false);
  std::vector<double> redundancy(n, -std::numeric_limits<double>::infinity());
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double score =
          step == 0 ? relevance[i] : lambda * relevance[i] - (1.0 - lambda) * redundancy[i];
      if (best == n || score > best_score ||
          (score == best_score && candidates[i].first < candidates[best].first)) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    picked.push_back(candidates[best].first);
    const auto chosen = candidates[best].second;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double sim = dot(candidates[i].second, chosen) / (norms[i] * norms[best]);
      redundancy[i] = std::max(redundancy[i], sim);
    }
  }
  return picked;
}

RetrievedSet retrieve(const AnnIndex& index, const Pool& pool, const VectorBlock& targets,
                      const RetrievalConfig& config) {
  config.validate();
  if (&index.view().pool() != &pool) {
    throw Error(ErrorKind::kInvalidArgument, "index was built over a different pool");
  }
  if (targets.count() == 0) throw Error(ErrorKind::kEmptyData, "no target vectors");
  if (targets.dim() != pool.dim()) {
    throw Error(ErrorKind::kDimMismatch, "target dim " + std::to_string(targets.dim()) +
                                             " vs pool dim " + std::to_string(pool.dim()));
  }
  return config.mmr ? retrieve_mmr(index, pool, targets, config)
                    : retrieve_plain(index, pool, targets, config);
}

void write_retrieved(const RetrievedSet& set, const std::filesystem::path& path) {
  std::string out;
  for (const RetrievedItem& item : set.items) {
    nlohmann::ordered_json record;
    record["text"] = item.instance.text;
    record["label"] = item.instance.label;
    record["lang"] = item.instance.language;
    record["task"] = item.instance.source_task;
    record["src_row"] = item.row;
    record["query_index"] = item.provenance.query_index;
    record["rank"] = item.provenance.rank;
    record["distance"] = item.provenance.distance;
    out += record.dump();
    out += '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIoFailure, "cannot open for writing " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  file.flush();
  if (!file) throw Error(ErrorKind::kIoFailure, "write failed: " + path.string());
}

}  // namespace xlaug
