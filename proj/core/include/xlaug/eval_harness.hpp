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

// Low-resource transfer protocol: a fixed validation/test split of the
// target data, seeded training subsets at several sizes, and for each
// (size, retrieval count, seed) cell a probe trained on the subset plus the
// instances retrieved for it. Retrieval count 0 is the Mono baseline.
//
// Results CSV (one row per (size, count) averaged over seeds, then one AVG
// row per count averaged over sizes):
//   train_size,retrieval_count,seed,f1_macro,wall_time_ms,prov_<task>...
// Aggregated rows carry `seed=mean`. Per-seed rows go to a companion runs
// file with the same columns.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xlaug/ann_index.hpp"
#include "xlaug/classifier.hpp"
#include "xlaug/metrics.hpp"
#include "xlaug/pool_store.hpp"
#include "xlaug/retriever.hpp"

namespace xlaug {

inline const std::vector<std::size_t> kDefaultTrainSizes = {10,  20,  30,  40,  50,   100,
                                                            200, 300, 400, 500, 1000, 2000};
inline const std::vector<std::uint64_t> kDefaultSeeds = {1, 2, 3, 4, 5};

struct ExperimentConfig {
  const Pool* target_pool = nullptr;
  PoolView source_pool;
  std::string target_name = "target";
  std::vector<std::size_t> train_sizes = kDefaultTrainSizes;
  std::vector<std::size_t> retrieval_counts = {0};
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::size_t val_size = 500;
  std::size_t test_size = 2000;
  std::uint64_t split_seed = 20240101;
  // total_r is replaced per cell. The target pool's languages are always
  // added to exclude_languages.
  RetrievalConfig retrieval;
  // rng_seed is replaced per run.
  TrainConfig train;
  HnswParams hnsw;
  bool record_wall_time = false;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> reservoir;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded disjoint partition of rows [0, pool_size); each part sorted.
/// Throws InsufficientData.
Split split_target(std::size_t pool_size, std::size_t val_size, std::size_t test_size,
                   std::uint64_t split_seed);

/// Uniform sample without replacement, returned sorted. Throws
/// InsufficientData.
std::vector<std::size_t> subsample(std::span<const std::size_t> reservoir, std::size_t size,
                                   std::uint64_t seed);

struct ResultRow {
  std::size_t train_size = 0;
  std::size_t retrieval_count = 0;
  std::uint64_t seed = 0;
  double f1_macro = 0.0;
  double wall_time_ms = 0.0;
  std::map<std::string, std::size_t> provenance;  // retrieved count per source task
  std::size_t training_examples = 0;
  bool single_label = false;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct SummaryRow {
  std::optional<std::size_t> train_size;  // nullopt: AVG row
  std::size_t retrieval_count = 0;
  double f1_macro = 0.0;
  double wall_time_ms = 0.0;
  std::map<std::string, double> provenance;
};

struct SweepResult {
  std::vector<std::string> tasks;  // provenance columns, sorted
  std::vector<ResultRow> runs;     // canonical (size, count, seed) order
  std::vector<SummaryRow> cells;   // mean over seeds, (size, count) order
  std::vector<SummaryRow> averages;
};

struct SweepOptions {
  std::size_t workers = 1;
  // Runs already completed by an interrupted sweep; those cells are skipped.
  std::vector<ResultRow> completed;
  // Called with the finished runs (canonical order) and the total cell count
  // when a cell fails, before the error propagates.
  std::function<void(std::span<const ResultRow>, std::size_t)> on_partial;
};

struct ProvenanceEntry {
  std::string task;
  double mean_count = 0.0;
  double percent = 0.0;
};

struct ProvenanceTable {
  std::string target;
  std::size_t retrieval_count = 0;
  std::size_t runs = 0;
  std::vector<ProvenanceEntry> entries;  // descending mean_count, then task
};

/// Prepared experiment: validated config, fixed split, and the index over
/// the filtered source view. The target and source pools must outlive it.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const Split& split() const noexcept { return split_; }
  const PoolView& retrieval_view() const noexcept { return retrieval_view_; }
  const std::set<std::string>& excluded_languages() const noexcept {
    return config_.retrieval.exclude_languages;
  }

  ResultRow run_condition(std::size_t train_size, std::size_t retrieval_count,
                          std::uint64_t seed) const;

  /// Training rows used for one run, for bookkeeping checks.
  std::vector<std::size_t> training_rows(std::size_t train_size, std::uint64_t seed) const;

  SweepResult sweep(const SweepOptions& options = {}) const;

 private:
  ExperimentConfig config_;
  Split split_;
  PoolView retrieval_view_;
  std::optional<AnnIndex> index_;
  LabeledData validation_;
  LabeledData test_;
  std::vector<std::string> tasks_;
};

/// Mean over seeds per (size, count) plus AVG rows; `runs` must be in
/// canonical order.
void summarize(SweepResult& result, std::span<const std::size_t> train_sizes,
               std::span<const std::size_t> retrieval_counts);

std::vector<ProvenanceTable> provenance_report(std::span<const ResultRow> rows,
                                               const std::string& target,
                                               std::size_t top_n = 0);

std::string results_csv(const SweepResult& result);
std::string runs_csv(std::span<const ResultRow> runs, std::span<const std::string> tasks);
std::string provenance_csv(std::span<const ProvenanceTable> tables);

/// Marker line appended to a runs file written by an interrupted sweep.
inline constexpr std::string_view kPartialMarker = "# partial";

/// Parses a runs file. Returns the rows and whether it carried the partial
/// marker. Throws MalformedRecord.
std::pair<std::vector<ResultRow>, bool> parse_runs_csv(const std::string& text);

/// Shortest round-trip formatting used for every float in the CSVs.
std::string format_double(double value);

}  // namespace xlaug
