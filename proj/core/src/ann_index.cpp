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
#include "xlaug/ann_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>
#include <string>

#include <zlib.h>

#include "xlaug/distance.hpp"
#include "xlaug/error.hpp"
#include "xlaug/random.hpp"

namespace xlaug {

struct AnnIndex::Candidate {
  double dist;  // squared
  std::uint32_t node;

  friend bool operator<(const Candidate& a, const Candidate& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.node < b.node);
  }
  friend bool operator>(const Candidate& a, const Candidate& b) { return b < a; }
};

// Per-search visited marks. Tags are reset lazily through an epoch counter.
struct AnnIndex::VisitedPool {
  struct Marks {
    std::vector<std::uint32_t> tags;
    std::uint32_t epoch = 0;

    void reset(std::size_t n) {
      if (tags.size() != n) tags.assign(n, 0);
      if (++epoch == 0) {
        std::fill(tags.begin(), tags.end(), 0);
        epoch = 1;
      }
    }
    bool visit(std::uint32_t node) {
      if (tags[node] == epoch) return false;
      tags[node] = epoch;
      return true;
    }
  };

  std::mutex mutex;
  std::vector<std::unique_ptr<Marks>> free;

  std::unique_ptr<Marks> acquire(std::size_t n) {
    std::unique_ptr<Marks> marks;
    {
      std::lock_guard lock(mutex);
      if (!free.empty()) {
        marks = std::move(free.back());
        free.pop_back();
      }
    }
    if (!marks) marks = std::make_unique<Marks>();
    marks->reset(n);
    return marks;
  }

  void release(std::unique_ptr<Marks> marks) {
    std::lock_guard lock(mutex);
    free.push_back(std::move(marks));
  }
};

namespace {

constexpr char kIndexMagic[4] = {'X', 'H', 'N', 'S'};
constexpr std::uint32_t kIndexVersion = 1;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  const std::string& bytes() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view v(bytes_.data() + pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorKind::kBadHeader, "index file truncated");
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::vector<Neighbor> finish(std::vector<Neighbor> result, std::size_t k) {
  std::sort(result.begin(), result.end(), neighbor_less);
  if (result.size() > k) result.resize(k);
  return result;
}

}  // namespace

void HnswParams::validate() const {
  if (max_neighbors < 2) {
    throw Error(ErrorKind::kInvalidArgument, "max_neighbors must be at least 2");
  }
  if (ef_construction < max_neighbors) {
    throw Error(ErrorKind::kInvalidArgument, "ef_construction must be >= max_neighbors");
  }
  if (ef_search < 1) throw Error(ErrorKind::kInvalidArgument, "ef_search must be >= 1");
}

std::vector<Neighbor> brute_force_search(const PoolView& view, std::span<const float> query,
                                         std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "k must be positive");
  if (view.empty()) return {};
  if (query.size() != view.pool().dim()) {
    throw Error(ErrorKind::kDimMismatch, "query dim " + std::to_string(query.size()) +
                                             " vs pool dim " +
                                             std::to_string(view.pool().dim()));
  }
  std::vector<Neighbor> all;
  all.reserve(view.size());
  for (std::size_t row : view.rows()) {
    const auto v = view.pool().vector(row);
    all.push_back({row, std::sqrt(squared_l2_unchecked(query.data(), v.data(), v.size()))});
  }
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    neighbor_less);
  all.resize(take);
  return all;
}

AnnIndex::AnnIndex(PoolView view, HnswParams params)
    : view_(std::move(view)), params_(params), visited_(std::make_unique<VisitedPool>()) {}

AnnIndex::AnnIndex(AnnIndex&&) noexcept = default;
AnnIndex& AnnIndex::operator=(AnnIndex&&) noexcept = default;
AnnIndex::~AnnIndex() = default;

double AnnIndex::node_distance(std::span<const float> query, std::uint32_t node) const {
  const auto v = node_vector(node);
  return squared_l2_unchecked(query.data(), v.data(), v.size());
}

std::span<const std::uint32_t> AnnIndex::links(std::size_t node, std::size_t level) const {
  if (level == 0) return base_links_[node];
  return upper_links_[node][level - 1];
}

std::vector<std::uint32_t>& AnnIndex::link_list(std::size_t node, std::size_t level) {
  if (level == 0) return base_links_[node];
  return upper_links_[node][level - 1];
}

AnnIndex AnnIndex::build(const PoolView& view, const HnswParams& params) {
  params.validate();
  if (view.empty()) throw Error(ErrorKind::kEmptyView, "cannot index an empty view");
  if (view.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::kInvalidArgument, "view too large");
  }
  for (std::size_t row : view.rows()) {
    for (float x : view.pool().vector(row)) {
      if (!std::isfinite(x)) {
        throw Error(ErrorKind::kNonFiniteVector, "row " + std::to_string(row), row);
      }
    }
  }

  AnnIndex index(view, params);
  const std::size_t n = view.size();
  index.levels_.resize(n);
  index.base_links_.resize(n);
  index.upper_links_.resize(n);

  Rng rng(params.rng_seed);
  const double level_mult = 1.0 / std::log(static_cast<double>(params.max_neighbors));
  for (std::size_t i = 0; i < n; ++i) {
    const double draw = std::floor(-std::log(rng.uniform_open0()) * level_mult);
    const auto level = static_cast<std::size_t>(std::min(draw, 255.0));
    index.levels_[i] = static_cast<std::uint8_t>(level);
    index.upper_links_[i].resize(level);
    index.insert(static_cast<std::uint32_t>(i), level);
  }
  return index;
}

std::uint32_t AnnIndex::greedy_descend(std::span<const float> query, std::uint32_t entry,
                                       std::size_t from_level, std::size_t to_level) const {
  std::uint32_t current = entry;
  double current_dist = node_distance(query, current);
  for (std::size_t level = from_level; level > to_level; --level) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::uint32_t next : links(current, level)) {
        const double d = node_distance(query, next);
        if (Candidate{d, next} < Candidate{current_dist, current}) {
          current = next;
          current_dist = d;
          moved = true;
        }
      }
    }
  }
  return current;
}

std::vector<AnnIndex::Candidate> AnnIndex::search_level(std::span<const float> query,
                                                        std::span<const Candidate> entries,
                                                        std::size_t ef,
                                                        std::size_t level) const {
  auto marks = visited_->acquire(levels_.size());
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
  std::priority_queue<Candidate> best;
  for (const Candidate& e : entries) {
    if (!marks->visit(e.node)) continue;
    frontier.push(e);
    best.push(e);
    if (best.size() > ef) best.pop();
  }
  while (!frontier.empty()) {
    const Candidate current = frontier.top();
    if (best.size() >= ef && best.top() < current) break;
    frontier.pop();
    for (std::uint32_t next : links(current.node, level)) {
      if (!marks->visit(next)) continue;
      const Candidate c{node_distance(query, next), next};
      if (best.size() < ef || c < best.top()) {
        frontier.push(c);
        best.push(c);
        if (best.size() > ef) best.pop();
      }
    }
  }
  visited_->release(std::move(marks));

  std::vector<Candidate> result(best.size());
  for (std::size_t i = result.size(); i-- > 0;) {
    result[i] = best.top();
    best.pop();
  }
  return result;
}

// Diversity heuristic: keep a candidate only if it is closer to the base
// point than to every neighbor already kept. `candidates` must be sorted.
std::vector<AnnIndex::Candidate> AnnIndex::select_neighbors(std::vector<Candidate> candidates,
                                                            std::size_t limit) const {
  if (candidates.size() <= limit) return candidates;
  std::vector<Candidate> kept;
  kept.reserve(limit);
  for (const Candidate& c : candidates) {
    const auto cv = node_vector(c.node);
    bool keep = true;
    for (const Candidate& k : kept) {
      const auto kv = node_vector(k.node);
      if (squared_l2_unchecked(cv.data(), kv.data(), cv.size()) < c.dist) {
        keep = false;
        break;
      }
    }
    if (keep) {
      kept.push_back(c);
      if (kept.size() >= limit) break;
    }
  }
  return kept;
}

void AnnIndex::insert(std::uint32_t node, std::size_t level) {
  if (node == 0) {
    entry_point_ = 0;
    max_level_ = level;
    return;
  }
  const auto query = node_vector(node);
  std::uint32_t entry = entry_point_;
  if (level < max_level_) entry = greedy_descend(query, entry, max_level_, level);

  std::vector<Candidate> entries{{node_distance(query, entry), entry}};
  for (std::size_t lc = std::min(level, max_level_) + 1; lc-- > 0;) {
    std::vector<Candidate> found = search_level(query, entries, params_.ef_construction, lc);
    const std::vector<Candidate> chosen = select_neighbors(found, params_.max_neighbors);

    auto& own = link_list(node, lc);
    own.clear();
    for (const Candidate& c : chosen) own.push_back(c.node);

    const std::size_t cap = max_links(lc);
    for (const Candidate& c : chosen) {
      auto& theirs = link_list(c.node, lc);
      if (theirs.size() < cap) {
        theirs.push_back(node);
        continue;
      }
      const auto base = node_vector(c.node);
      std::vector<Candidate> pool;
      pool.reserve(theirs.size() + 1);
      pool.push_back({c.dist, node});
      for (std::uint32_t other : theirs) {
        const auto ov = node_vector(other);
        pool.push_back({squared_l2_unchecked(base.data(), ov.data(), base.size()), other});
      }
      std::sort(pool.begin(), pool.end());
      const std::vector<Candidate> pruned = select_neighbors(std::move(pool), cap);
      theirs.clear();
      for (const Candidate& p : pruned) theirs.push_back(p.node);
    }
    entries = std::move(found);
  }
  if (level > max_level_) {
    entry_point_ = node;
    max_level_ = level;
  }
}

std::vector<Neighbor> AnnIndex::search(std::span<const float> query, std::size_t k,
                                       std::optional<std::size_t> ef_search) const {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "k must be positive");
  if (query.size() != dim()) {
    throw Error(ErrorKind::kDimMismatch, "query dim " + std::to_string(query.size()) +
                                             " vs index dim " + std::to_string(dim()));
  }
  if (size() < params_.exact_below || k >= size()) return brute_force_search(view_, query, k);

  const std::size_t ef = std::max(ef_search.value_or(params_.ef_search), k);
  const std::uint32_t entry = greedy_descend(query, entry_point_, max_level_, 0);
  const std::vector<Candidate> entries{{node_distance(query, entry), entry}};
  const std::vector<Candidate> found = search_level(query, entries, ef, 0);

  std::vector<Neighbor> result;
  result.reserve(std::min(k, found.size()));
  for (std::size_t i = 0; i < found.size() && i < k; ++i) {
    result.push_back({view_.rows()[found[i].node], std::sqrt(found[i].dist)});
  }
  return finish(std::move(result), k);
}

bool AnnIndex::same_graph(const AnnIndex& other) const {
  return std::equal(view_.rows().begin(), view_.rows().end(), other.view_.rows().begin(),
                    other.view_.rows().end()) &&
         params_ == other.params_ && levels_ == other.levels_ &&
         base_links_ == other.base_links_ && upper_links_ == other.upper_links_ &&
         entry_point_ == other.entry_point_ && max_level_ == other.max_level_;
}

void AnnIndex::save(const std::filesystem::path& path, std::uint32_t source_checksum) const {
  ByteWriter w;
  w.raw(kIndexMagic, 4);
  w.u32(kIndexVersion);
  w.u32(source_checksum);
  w.u64(params_.max_neighbors);
  w.u64(params_.ef_construction);
  w.u64(params_.ef_search);
  w.u64(params_.rng_seed);
  w.u64(params_.exact_below);
  w.u64(view_.pool().size());
  w.u64(dim());
  w.u64(size());
  for (std::size_t row : view_.rows()) w.u64(row);
  w.u32(entry_point_);
  w.u32(static_cast<std::uint32_t>(max_level_));
  for (std::size_t node = 0; node < size(); ++node) {
    w.u8(levels_[node]);
    for (std::size_t level = 0; level <= levels_[node]; ++level) {
      const auto l = links(node, level);
      w.u32(static_cast<std::uint32_t>(l.size()));
      for (std::uint32_t id : l) w.u32(id);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot open for writing " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  out.flush();
  if (!out) throw Error(ErrorKind::kIoFailure, "write failed: " + path.string());
}

AnnIndex AnnIndex::load(const std::filesystem::path& path, const Pool& pool,
                        std::uint32_t source_checksum) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  ByteReader r(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));

  if (r.raw(4) != std::string_view(kIndexMagic, 4)) {
    throw Error(ErrorKind::kBadHeader, path.string() + ": not an index file");
  }
  if (r.u32() != kIndexVersion) {
    throw Error(ErrorKind::kBadHeader, path.string() + ": unsupported index version");
  }
  if (r.u32() != source_checksum) {
    throw Error(ErrorKind::kStaleIndex,
                path.string() + " was built from a different vector file");
  }
  HnswParams params;
  params.max_neighbors = r.u64();
  params.ef_construction = r.u64();
  params.ef_search = r.u64();
  params.rng_seed = r.u64();
  params.exact_below = r.u64();
  params.validate();
  const std::uint64_t pool_size = r.u64();
  const std::uint64_t dim = r.u64();
  if (pool_size != pool.size() || dim != pool.dim()) {
    throw Error(ErrorKind::kStaleIndex, path.string() + " does not match the pool shape");
  }
  const std::uint64_t n = r.u64();
  if (n == 0 || n > pool_size) throw Error(ErrorKind::kBadHeader, "bad node count");
  std::vector<std::size_t> rows(n);
  for (auto& row : rows) {
    row = r.u64();
    if (row >= pool_size) throw Error(ErrorKind::kBadHeader, "row out of range");
  }
  if (!std::is_sorted(rows.begin(), rows.end()) ||
      std::adjacent_find(rows.begin(), rows.end()) != rows.end()) {
    throw Error(ErrorKind::kBadHeader, "index rows not strictly ascending");
  }

  AnnIndex index(PoolView(pool, std::move(rows)), params);
  index.entry_point_ = r.u32();
  index.max_level_ = r.u32();
  if (index.entry_point_ >= n) throw Error(ErrorKind::kBadHeader, "bad entry point");
  index.levels_.resize(n);
  index.base_links_.resize(n);
  index.upper_links_.resize(n);
  for (std::size_t node = 0; node < n; ++node) {
    const std::uint8_t level = r.u8();
    if (level > index.max_level_) throw Error(ErrorKind::kBadHeader, "bad node level");
    index.levels_[node] = level;
    index.upper_links_[node].resize(level);
    for (std::size_t lc = 0; lc <= level; ++lc) {
      const std::uint32_t count = r.u32();
      if (count > index.max_links(lc)) throw Error(ErrorKind::kBadHeader, "bad link count");
      auto& list = index.link_list(node, lc);
      list.resize(count);
      for (auto& id : list) {
        id = r.u32();
        if (id >= n) throw Error(ErrorKind::kBadHeader, "link out of range");
      }
    }
  }
  if (!r.done()) throw Error(ErrorKind::kBadHeader, "trailing bytes in index file");
  return index;
}

std::uint32_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    const auto got = in.gcount();
    if (got > 0) {
      crc = crc32(crc, reinterpret_cast<const Bytef*>(buffer.data()), static_cast<uInt>(got));
    }
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace xlaug
