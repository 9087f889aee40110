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
#include "xlaug/experiment_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xlaug/error.hpp"

namespace xlaug {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

class LineParser {
 public:
  LineParser(std::string key, std::string value, std::size_t line_no)
      : key_(std::move(key)), value_(std::move(value)), line_no_(line_no) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorKind::kMalformedRecord,
                "config line " + std::to_string(line_no_) + " (" + key_ + "): " + why, line_no_);
  }

  template <typename T>
  T number(const std::string& text) const {
    T v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc() || ptr != end) fail("bad number '" + text + "'");
    return v;
  }

  template <typename T>
  T number() const {
    return number<T>(value_);
  }

  template <typename T>
  std::vector<T> list() const {
    std::vector<T> out;
    for (const auto& item : items()) out.push_back(number<T>(item));
    return out;
  }

  std::vector<std::string> items() const {
    std::vector<std::string> out;
    std::istringstream in(value_);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::set<std::string> set() const {
    const auto v = items();
    return {v.begin(), v.end()};
  }

  bool boolean() const {
    if (value_ == "true" || value_ == "1") return true;
    if (value_ == "false" || value_ == "0") return false;
    fail("expected true or false");
  }

  const std::string& text() const { return value_; }

 private:
  std::string key_;
  std::string value_;
  std::size_t line_no_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

bool ExperimentFile::needs_source() const {
  const auto& counts = settings.retrieval_counts;
  return std::any_of(counts.begin(), counts.end(), [](std::size_t r) { return r > 0; });
}

ExperimentFile parse_experiment_config(std::string_view text,
                                       const std::filesystem::path& base_dir) {
  ExperimentFile file;
  ExperimentConfig& s = file.settings;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kMalformedRecord,
                  "config line " + std::to_string(line_no) + ": expected key = value", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const LineParser p(key, trim(line.substr(eq + 1)), line_no);
    if (!seen.insert(key).second) p.fail("duplicate key");

    if (key == "target_manifest") file.target_manifest = resolve(base_dir, p.text());
    else if (key == "target_vectors") file.target_vectors = resolve(base_dir, p.text());
    else if (key == "source_manifest") file.source_manifest = resolve(base_dir, p.text());
    else if (key == "source_vectors") file.source_vectors = resolve(base_dir, p.text());
    else if (key == "output") file.output = resolve(base_dir, p.text());
    else if (key == "target_name") s.target_name = p.text();
    else if (key == "train_sizes") s.train_sizes = p.list<std::size_t>();
    else if (key == "retrieval_counts") s.retrieval_counts = p.list<std::size_t>();
    else if (key == "seeds") s.seeds = p.list<std::uint64_t>();
    else if (key == "split_seed") s.split_seed = p.number<std::uint64_t>();
    else if (key == "val_size") s.val_size = p.number<std::size_t>();
    else if (key == "test_size") s.test_size = p.number<std::size_t>();
    else if (key == "exclude_languages") s.retrieval.exclude_languages = p.set();
    else if (key == "exclude_tasks") s.retrieval.exclude_tasks = p.set();
    else if (key == "k_init") s.retrieval.k_init = p.number<std::size_t>();
    else if (key == "mmr_lambda") {
      if (!s.retrieval.mmr) s.retrieval.mmr.emplace();
      s.retrieval.mmr->lambda = p.number<double>();
    } else if (key == "mmr_candidate_multiplier") {
      if (!s.retrieval.mmr) s.retrieval.mmr.emplace();
      s.retrieval.mmr->candidate_multiplier = p.number<std::size_t>();
    }
    else if (key == "learning_rate") s.train.learning_rate = p.number<double>();
    else if (key == "batch_size") s.train.batch_size = p.number<std::size_t>();
    else if (key == "epochs") s.train.epochs = p.number<std::size_t>();
    else if (key == "l2") s.train.l2 = p.number<double>();
    else if (key == "select_best_on_validation") s.train.select_best_on_validation = p.boolean();
    else if (key == "hnsw_m") s.hnsw.max_neighbors = p.number<std::size_t>();
    else if (key == "hnsw_ef_construction") s.hnsw.ef_construction = p.number<std::size_t>();
    else if (key == "hnsw_ef_search") s.hnsw.ef_search = p.number<std::size_t>();
    else if (key == "hnsw_seed") s.hnsw.rng_seed = p.number<std::uint64_t>();
    else if (key == "hnsw_exact_below") s.hnsw.exact_below = p.number<std::size_t>();
    else if (key == "record_wall_time") s.record_wall_time = p.boolean();
    else if (key == "workers") file.workers = p.number<std::size_t>();
    else if (key == "provenance_top_n") file.provenance_top_n = p.number<std::size_t>();
    else p.fail("unknown key");
  }

  if (file.target_manifest.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "config is missing target_manifest");
  }
  if (file.target_vectors.empty()) file.target_vectors = default_vectors_path(file.target_manifest);
  if (file.needs_source() && file.source_manifest.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "config has retrieval counts > 0 but no source_manifest");
  }
  if (!file.source_manifest.empty() && file.source_vectors.empty()) {
    file.source_vectors = default_vectors_path(file.source_manifest);
  }
  if (s.retrieval.mmr) s.retrieval.mmr->validate();
  s.train.validate();
  return file;
}

ExperimentFile load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str(), path.parent_path());
}

}  // namespace xlaug
