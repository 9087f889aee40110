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

// Labeled multilingual pool: instance metadata (`.pool.jsonl`) plus the
// aligned float32 embedding block (`.vec`).
//
// Vector file layout, little-endian, no padding:
//   "XVEC" | u32 version (=1) | u64 count | u32 dim | count*dim float32

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xlaug {

struct Instance {
  std::size_t id = 0;  // row index, assigned at load time
  std::string text;
  int label = 0;  // 1 = hate, 0 = non-hate
  std::string language;
  std::string source_task;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Row-major count x dim float32 matrix.
class VectorBlock {
 public:
  VectorBlock() = default;
  explicit VectorBlock(std::size_t dim) : dim_(dim) {}
  VectorBlock(std::size_t dim, std::vector<float> data);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  void append(std::span<const float> values);

  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const VectorBlock&, const VectorBlock&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

struct Pool {
  std::vector<Instance> instances;
  VectorBlock vectors;

  std::size_t size() const noexcept { return instances.size(); }
  std::size_t dim() const noexcept { return vectors.dim(); }
  std::span<const float> vector(std::size_t row) const { return vectors.row(row); }

  /// Appends an instance and its embedding; the id is set to the new row.
  void add(Instance instance, std::span<const float> embedding);

  friend bool operator==(const Pool&, const Pool&) = default;
};

/// Non-owning subset of pool rows. The pool must outlive the view.
class PoolView {
 public:
  PoolView() = default;
  PoolView(const Pool& pool, std::vector<std::size_t> selected);

  static PoolView all(const Pool& pool);

  const Pool& pool() const { return *pool_; }
  std::span<const std::size_t> rows() const noexcept { return selected_; }
  std::size_t size() const noexcept { return selected_.size(); }
  bool empty() const noexcept { return selected_.empty(); }
  bool contains(std::size_t row) const;

 private:
  const Pool* pool_ = nullptr;
  std::vector<std::size_t> selected_;  // sorted, unique
};

/// Throws Error if any Pool invariant is violated.
void validate_pool(const Pool& pool);

bool is_language_code(std::string_view code);

Pool load_pool(const std::filesystem::path& manifest_path,
               const std::filesystem::path& vectors_path);
void write_pool(const Pool& pool, const std::filesystem::path& manifest_path,
                const std::filesystem::path& vectors_path);

std::vector<Instance> read_manifest(const std::filesystem::path& path);
void write_manifest(std::span<const Instance> instances,
                    const std::filesystem::path& path);

VectorBlock read_vectors(const std::filesystem::path& path);
void write_vectors(const VectorBlock& block, const std::filesystem::path& path);

/// `<stem>.pool.jsonl` -> `<stem>.vec`; other names get `.vec` appended.
std::filesystem::path default_vectors_path(const std::filesystem::path& manifest);

struct LanguageStats {
  std::size_t count = 0;
  double percent = 0.0;
};

struct TaskStats {
  std::size_t count = 0;
  std::size_t hateful = 0;
  double hate_fraction = 0.0;
};

struct StatsReport {
  std::size_t total = 0;
  std::size_t dim = 0;
  double hate_fraction = 0.0;
  std::map<std::string, LanguageStats> languages;
  std::map<std::string, TaskStats> tasks;
};

StatsReport pool_stats(const Pool& pool);

PoolView filter_pool(const Pool& pool, const std::set<std::string>& exclude_languages,
                     const std::set<std::string>& exclude_tasks);

}  // namespace xlaug
