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

// Sweep configuration file: one `key = value` per line, `#` starts a
// comment. Lists are comma-separated. Relative paths resolve against the
// config file's directory.
//
//   target_manifest   path (required)       target_vectors   path
//   source_manifest   path                  source_vectors   path
//   target_name       string                output           results CSV path
//   train_sizes       list                  retrieval_counts list (0 = Mono)
//   seeds             list                  split_seed       integer
//   val_size          integer               test_size        integer
//   exclude_languages list                  exclude_tasks    list
//   k_init            integer               mmr_lambda       float (enables MMR)
//   mmr_candidate_multiplier integer
//   learning_rate  batch_size  epochs  l2  select_best_on_validation
//   hnsw_m  hnsw_ef_construction  hnsw_ef_search  hnsw_seed  hnsw_exact_below
//   record_wall_time  workers  provenance_top_n
//
// Vector paths default to the manifest path with `.pool.jsonl` replaced by
// `.vec`.

#include <cstddef>
#include <filesystem>
#include <string_view>

#include "xlaug/eval_harness.hpp"

namespace xlaug {

struct ExperimentFile {
  std::filesystem::path target_manifest;
  std::filesystem::path target_vectors;
  std::filesystem::path source_manifest;
  std::filesystem::path source_vectors;
  std::filesystem::path output = "results.csv";
  std::size_t workers = 1;
  std::size_t provenance_top_n = 4;
  // Everything except the pools themselves.
  ExperimentConfig settings;

  bool needs_source() const;
};

/// Throws MalformedRecord (line number in index()) or InvalidArgument.
ExperimentFile parse_experiment_config(std::string_view text,
                                       const std::filesystem::path& base_dir = {});

ExperimentFile load_experiment_config(const std::filesystem::path& path);

}  // namespace xlaug
