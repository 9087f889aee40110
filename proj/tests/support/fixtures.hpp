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

// Synthetic pools and scratch directories shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>
#include <vector>

#include "xlaug/pool_store.hpp"
#include "xlaug/random.hpp"

namespace xlaug::testing {

inline const std::vector<std::string> kLanguages = {"en", "tr", "de", "es", "it"};
inline const std::vector<std::string> kTasks = {"Ken20_en", "Dyn21_en", "Xdomain_tr",
                                                "Gahd24_de", "Bas19_es", "San20_it"};

// Task names carry their language code as a suffix.
inline std::string language_of_task(const std::string& task) { return task.substr(task.size() - 2); }

struct RandomPoolOptions {
  std::size_t rows = 100;
  std::size_t dim = 8;
  double duplicate_text_rate = 0.0;  // probability a row reuses an earlier text
  bool unicode_text = false;
};

inline std::string random_text(Rng& rng, bool unicode) {
  static const std::vector<std::string> kPieces = {"hello", "über", "مرحبا", "日本語",
                                                   "çok",   "ß",    "word",  "\"q\"",
                                                   "a\\b",  "tab\t", "emoji 😀", "línea\n"};
  std::string text;
  const auto words = 1 + rng.below(6);
  for (std::uint64_t w = 0; w < words; ++w) {
    if (!text.empty()) text += ' ';
    if (unicode) {
      text += kPieces[rng.below(kPieces.size())];
    } else {
      text += "w" + std::to_string(rng.below(1000000));
    }
  }
  return text;
}

inline Pool random_pool(std::uint64_t seed, const RandomPoolOptions& options = {}) {
  Rng rng(seed);
  Pool pool;
  pool.vectors = VectorBlock(options.dim);
  std::vector<float> v(options.dim);
  for (std::size_t i = 0; i < options.rows; ++i) {
    Instance inst;
    const std::string& task = kTasks[rng.below(kTasks.size())];
    inst.source_task = task;
    inst.language = language_of_task(task);
    inst.label = static_cast<int>(rng.below(2));
    if (i > 0 && rng.uniform() < options.duplicate_text_rate) {
      inst.text = pool.instances[rng.below(i)].text;
    } else {
      inst.text = random_text(rng, options.unicode_text) + " #" + std::to_string(i);
    }
    for (auto& x : v) x = static_cast<float>(rng.normal());
    pool.add(std::move(inst), v);
  }
  return pool;
}

inline VectorBlock random_vectors(std::uint64_t seed, std::size_t count, std::size_t dim) {
  Rng rng(seed);
  VectorBlock block(dim);
  std::vector<float> v(dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& x : v) x = static_cast<float>(rng.normal());
    block.append(v);
  }
  return block;
}

struct TransferPools {
  Pool target;
  Pool source;
};

/// Label-conditional Gaussians: label y has mean (y ? +1 : -1) * separation/2
/// along a random unit direction, unit variance in every coordinate. The
/// source pool draws from the same distributions shifted by a random offset
/// of norm `offset_norm`, under a different language code.
struct TransferOptions {
  std::size_t dim = 32;
  std::size_t target_rows = 2600;
  std::size_t source_rows = 10000;
  double separation = 3.0;
  double offset_norm = 1.0;
  std::string target_language = "xx";
  std::string source_language = "zz";
};

inline std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> u(dim);
  double n2 = 0.0;
  for (auto& x : u) {
    x = rng.normal();
    n2 += x * x;
  }
  for (auto& x : u) x /= std::sqrt(n2);
  return u;
}

inline TransferPools make_transfer_pools(std::uint64_t seed, const TransferOptions& o = {}) {
  Rng rng(seed);
  const auto direction = random_unit(rng, o.dim);
  const auto offset_dir = random_unit(rng, o.dim);
  auto fill = [&](Pool& pool, std::size_t rows, double shift, const std::string& lang,
                  const std::vector<std::string>& tasks, const std::string& prefix) {
    pool.vectors = VectorBlock(o.dim);
    std::vector<float> v(o.dim);
    for (std::size_t i = 0; i < rows; ++i) {
      const int label = static_cast<int>(i % 2);
      const double sign = label == 1 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < o.dim; ++j) {
        v[j] = static_cast<float>(sign * o.separation / 2.0 * direction[j] +
                                  shift * offset_dir[j] + rng.normal());
      }
      Instance inst;
      inst.text = prefix + std::to_string(i);
      inst.label = label;
      inst.language = lang;
      inst.source_task = tasks[i % tasks.size()];
      pool.add(std::move(inst), v);
    }
  };
  TransferPools pools;
  fill(pools.target, o.target_rows, 0.0, o.target_language, {"Syn_" + o.target_language},
       "target ");
  fill(pools.source, o.source_rows, o.offset_norm, o.source_language,
       {"SynA_" + o.source_language, "SynB_" + o.source_language, "SynC_" + o.source_language},
       "source ");
  return pools;
}

/// Per-test scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("xlaug-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace xlaug::testing
