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

// xlaug: build-index | retrieve | train | sweep | stats
//
// Exit codes: 0 ok, 2 input validation, 3 retrieval shortfall, 4 runtime.
// Summaries go to stderr; machine-readable output to files or stdout.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "xlaug/ann_index.hpp"
#include "xlaug/classifier.hpp"
#include "xlaug/error.hpp"
#include "xlaug/eval_harness.hpp"
#include "xlaug/experiment_config.hpp"
#include "xlaug/metrics.hpp"
#include "xlaug/pool_store.hpp"
#include "xlaug/retriever.hpp"

namespace fs = std::filesystem;
using namespace xlaug;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitShortfall = 3;
constexpr int kExitRuntime = 4;

// Raised for failures that happen while reading or validating inputs.
struct InputError {
  std::string message;
};

template <typename F>
auto input_step(F&& step) -> decltype(step()) {
  try {
    return step();
  } catch (const Error& e) {
    throw InputError{e.what()};
  }
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw InputError{std::string(what) + " not found: " + path.string()};
  }
}

fs::path vectors_or_default(const std::string& vectors, const std::string& manifest) {
  return vectors.empty() ? default_vectors_path(manifest) : fs::path(vectors);
}

Pool load_checked(const fs::path& manifest, const fs::path& vectors) {
  require_file(manifest, "pool manifest");
  require_file(vectors, "vector file");
  return input_step([&] { return load_pool(manifest, vectors); });
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot open for writing " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::kIoFailure, "write failed: " + path.string());
}

fs::path sibling(const fs::path& output, const std::string& suffix) {
  fs::path p = output;
  return p.replace_extension(suffix);
}

// ---------------------------------------------------------------------------

struct BuildIndexArgs {
  std::string pool, vectors, out;
  std::size_t m = 128, ef_construction = 200, ef_search = 128, exact_below = 2000;
  std::uint64_t seed = 42;
  std::vector<std::string> exclude_lang, exclude_task;
};

int build_index(const BuildIndexArgs& a) {
  HnswParams params;
  params.max_neighbors = a.m;
  params.ef_construction = a.ef_construction;
  params.ef_search = a.ef_search;
  params.rng_seed = a.seed;
  params.exact_below = a.exact_below;
  input_step([&] { params.validate(); });

  const fs::path vectors = vectors_or_default(a.vectors, a.pool);
  const Pool pool = load_checked(a.pool, vectors);
  const PoolView view = filter_pool(pool, {a.exclude_lang.begin(), a.exclude_lang.end()},
                                    {a.exclude_task.begin(), a.exclude_task.end()});
  if (view.empty()) throw InputError{"no rows left to index in " + a.pool};

  const std::uint32_t checksum = file_checksum(vectors);
  const AnnIndex index = AnnIndex::build(view, params);
  index.save(a.out, checksum);
  std::cerr << "indexed rows=" << index.size() << " dim=" << index.dim() << " m=" << params.max_neighbors
            << " ef_construction=" << params.ef_construction << " ef_search=" << params.ef_search
            << " seed=" << params.rng_seed << " -> " << a.out << '\n';
  std::cout << "index_checksum " << std::hex << file_checksum(a.out) << std::dec << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RetrieveArgs {
  std::string index, pool, vectors, queries, out;
  std::size_t r = 0;
  std::optional<std::size_t> k_init;
  std::vector<std::string> exclude_lang, exclude_task;
  std::optional<double> mmr_lambda;
  std::size_t mmr_multiplier = 2;
};

int retrieve_cmd(const RetrieveArgs& a) {
  RetrievalConfig config;
  config.total_r = a.r;
  config.k_init = a.k_init;
  config.exclude_languages = {a.exclude_lang.begin(), a.exclude_lang.end()};
  config.exclude_tasks = {a.exclude_task.begin(), a.exclude_task.end()};
  if (a.mmr_lambda) config.mmr = MmrConfig{*a.mmr_lambda, a.mmr_multiplier};
  input_step([&] { config.validate(); });

  const fs::path vectors = vectors_or_default(a.vectors, a.pool);
  const Pool pool = load_checked(a.pool, vectors);
  require_file(a.queries, "query vector file");
  require_file(a.index, "index file");
  const VectorBlock queries = input_step([&] { return read_vectors(a.queries); });
  if (queries.dim() != pool.dim()) {
    throw InputError{"query dim " + std::to_string(queries.dim()) + " does not match pool dim " +
                     std::to_string(pool.dim())};
  }
  const AnnIndex index =
      input_step([&] { return AnnIndex::load(a.index, pool, file_checksum(vectors)); });

  RetrievedSet set;
  try {
    set = retrieve(index, pool, queries, config);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kShortfall) throw;
    std::cerr << "shortfall: retrieved " << e.index().value_or(0) << " of " << a.r
              << " unique instances\n";
    return kExitShortfall;
  }
  write_retrieved(set, a.out);

  std::map<std::string, std::size_t> histogram;
  for (const RetrievedItem& item : set.items) ++histogram[item.instance.source_task];
  std::cerr << "retrieved " << set.items.size() << " instances (k=" << set.final_k
            << ", rounds=" << set.rounds << ") -> " << a.out << '\n';
  for (const auto& [task, count] : histogram) std::cerr << "  " << task << ' ' << count << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string pool, vectors, val_pool, val_vectors, eval_pool, eval_vectors, out;
  std::uint64_t seed = 0;
  double lr = 0.1, l2 = 1e-4;
  std::size_t batch_size = 16;
  std::optional<std::size_t> epochs;
  bool no_select_best = false;
};

LabeledData labeled(const Pool& pool) {
  LabeledData data(pool.dim());
  for (std::size_t i = 0; i < pool.size(); ++i) data.add(pool.vector(i), pool.instances[i].label);
  return data;
}

int train_cmd(const TrainArgs& a) {
  TrainConfig config;
  config.learning_rate = a.lr;
  config.batch_size = a.batch_size;
  config.epochs = a.epochs;
  config.l2 = a.l2;
  config.rng_seed = a.seed;
  config.select_best_on_validation = !a.no_select_best;
  input_step([&] { config.validate(); });

  const Pool train_pool = load_checked(a.pool, vectors_or_default(a.vectors, a.pool));
  if (train_pool.size() == 0) throw InputError{"training pool is empty: " + a.pool};
  std::optional<Pool> val_pool, eval_pool;
  if (!a.val_pool.empty()) {
    val_pool = load_checked(a.val_pool, vectors_or_default(a.val_vectors, a.val_pool));
  }
  if (!a.eval_pool.empty()) {
    eval_pool = load_checked(a.eval_pool, vectors_or_default(a.eval_vectors, a.eval_pool));
  }
  for (const auto* other : {val_pool ? &*val_pool : nullptr, eval_pool ? &*eval_pool : nullptr}) {
    if (other && other->size() > 0 && other->dim() != train_pool.dim()) {
      throw InputError{"dim " + std::to_string(other->dim()) + " does not match training dim " +
                       std::to_string(train_pool.dim())};
    }
  }

  const LabeledData val = val_pool ? labeled(*val_pool) : LabeledData(train_pool.dim());
  const TrainResult result = train(labeled(train_pool), val, config);
  save_model(result.model, a.out);

  const EpochRecord& chosen = result.history.epochs[result.history.selected_epoch];
  std::cerr << "trained on " << train_pool.size() << " examples for "
            << result.history.epochs.size() << " epochs; selected epoch "
            << result.history.selected_epoch + 1 << " (loss " << chosen.train_loss;
  if (chosen.val_f1_macro) std::cerr << ", val F1-macro " << *chosen.val_f1_macro;
  std::cerr << ") -> " << a.out << '\n';
  if (result.history.single_label) std::cerr << "warning: training data has a single label\n";
  if (eval_pool) {
    const LabeledData test = labeled(*eval_pool);
    std::cout << "f1_macro " << format_double(f1_macro(predict_labels(result.model, test), test.labels()))
              << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string config, out;
  std::optional<std::size_t> workers;
  bool resume = false;
};

int sweep_cmd(const SweepArgs& a) {
  require_file(a.config, "config file");
  ExperimentFile file = input_step([&] { return load_experiment_config(a.config); });
  if (!a.out.empty()) file.output = a.out;
  const std::size_t workers = a.workers.value_or(file.workers);

  require_file(file.target_manifest, "target manifest");
  require_file(file.target_vectors, "target vectors");
  if (file.needs_source()) {
    require_file(file.source_manifest, "source manifest");
    require_file(file.source_vectors, "source vectors");
  }
  const Pool target = load_checked(file.target_manifest, file.target_vectors);
  std::optional<Pool> source;
  if (!file.source_manifest.empty()) source = load_checked(file.source_manifest, file.source_vectors);

  ExperimentConfig config = file.settings;
  config.target_pool = &target;
  if (source) config.source_pool = PoolView::all(*source);

  const fs::path runs_path = sibling(file.output, ".runs.csv");
  const fs::path provenance_path = sibling(file.output, ".provenance.csv");

  SweepOptions options;
  options.workers = workers;
  if (a.resume && fs::exists(runs_path)) {
    auto [rows, partial] = input_step([&] {
      std::ifstream in(runs_path, std::ios::binary);
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      return parse_runs_csv(text);
    });
    options.completed = std::move(rows);
    std::cerr << "resuming with " << options.completed.size() << " completed runs"
              << (partial ? "" : " (runs file was complete)") << '\n';
  }

  std::optional<Experiment> experiment;
  input_step([&] { experiment.emplace(config); });
  options.on_partial = [&](std::span<const ResultRow> done, std::size_t total) {
    std::set<std::string> names;
    for (const auto& row : done) {
      for (const auto& [task, c] : row.provenance) names.insert(task);
    }
    std::string text = runs_csv(done, std::vector<std::string>(names.begin(), names.end()));
    text += std::string(kPartialMarker) + " completed=" + std::to_string(done.size()) +
            " total=" + std::to_string(total) + '\n';
    write_text(runs_path, text);
    std::cerr << "sweep interrupted after " << done.size() << " of " << total
              << " runs; rerun with --resume to continue\n";
  };

  const SweepResult result = experiment->sweep(options);
  write_text(file.output, results_csv(result));
  write_text(runs_path, runs_csv(result.runs, result.tasks));
  write_text(provenance_path,
             provenance_csv(provenance_report(result.runs, config.target_name,
                                              file.provenance_top_n)));

  std::size_t flagged = 0;
  for (const ResultRow& row : result.runs) flagged += row.single_label;
  std::cerr << "sweep: " << result.runs.size() << " runs, " << result.cells.size()
            << " cells -> " << file.output.string() << '\n';
  if (flagged > 0) std::cerr << "warning: " << flagged << " runs trained on a single label\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string pool, vectors;
};

int stats_cmd(const StatsArgs& a) {
  const Pool pool = load_checked(a.pool, vectors_or_default(a.vectors, a.pool));
  const StatsReport report = pool_stats(pool);
  nlohmann::ordered_json out;
  out["total"] = report.total;
  out["dim"] = report.dim;
  out["hate_fraction"] = report.hate_fraction;
  out["languages"] = nlohmann::ordered_json::object();
  for (const auto& [code, lang] : report.languages) {
    out["languages"][code] = {{"count", lang.count}, {"percent", lang.percent}};
  }
  out["tasks"] = nlohmann::ordered_json::object();
  for (const auto& [name, task] : report.tasks) {
    out["tasks"][name] = {{"count", task.count}, {"hate_fraction", task.hate_fraction}};
  }
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual retrieval augmentation for low-resource classification"};
  app.require_subcommand(1);

  BuildIndexArgs build;
  auto* build_cmd = app.add_subcommand("build-index", "Build an HNSW index over a pool");
  build_cmd->add_option("--pool", build.pool, "Pool manifest (.pool.jsonl)")->required();
  build_cmd->add_option("--vectors", build.vectors, "Vector file (.vec); defaults next to --pool");
  build_cmd->add_option("--out", build.out, "Index output path")->required();
  build_cmd->add_option("--m", build.m, "Max neighbors per node")->capture_default_str();
  build_cmd->add_option("--ef-construction", build.ef_construction)->capture_default_str();
  build_cmd->add_option("--ef-search", build.ef_search)->capture_default_str();
  build_cmd->add_option("--seed", build.seed, "Level-assignment seed")->capture_default_str();
  build_cmd->add_option("--exact-below", build.exact_below,
                        "Search views smaller than this exhaustively")->capture_default_str();
  build_cmd->add_option("--exclude-lang", build.exclude_lang, "Languages to leave out");
  build_cmd->add_option("--exclude-task", build.exclude_task, "Source tasks to leave out");

  RetrieveArgs ret;
  auto* ret_cmd = app.add_subcommand("retrieve", "Retrieve R unique instances for query vectors");
  ret_cmd->add_option("--index", ret.index)->required();
  ret_cmd->add_option("--pool", ret.pool)->required();
  ret_cmd->add_option("--vectors", ret.vectors, "Pool vector file; defaults next to --pool");
  ret_cmd->add_option("--queries", ret.queries, "Query vector file (.vec)")->required();
  ret_cmd->add_option("--r", ret.r, "Number of unique instances")->required()->check(CLI::PositiveNumber);
  ret_cmd->add_option("--k-init", ret.k_init, "Initial per-query k (default ceil(R/m))");
  ret_cmd->add_option("--exclude-lang", ret.exclude_lang);
  ret_cmd->add_option("--exclude-task", ret.exclude_task);
  ret_cmd->add_option("--mmr-lambda", ret.mmr_lambda, "Enable MMR with this lambda")
      ->check(CLI::Range(0.0, 1.0));
  ret_cmd->add_option("--mmr-multiplier", ret.mmr_multiplier)->capture_default_str();
  ret_cmd->add_option("--out", ret.out, "Retrieved manifest output")->required();

  TrainArgs tr;
  auto* train_sub = app.add_subcommand("train", "Train the logistic probe on a labeled pool");
  train_sub->add_option("--pool", tr.pool)->required();
  train_sub->add_option("--vectors", tr.vectors);
  train_sub->add_option("--val-pool", tr.val_pool);
  train_sub->add_option("--val-vectors", tr.val_vectors);
  train_sub->add_option("--eval-pool", tr.eval_pool, "Score F1-macro on this pool");
  train_sub->add_option("--eval-vectors", tr.eval_vectors);
  train_sub->add_option("--out", tr.out, "Model output path")->required();
  train_sub->add_option("--seed", tr.seed)->capture_default_str();
  train_sub->add_option("--lr", tr.lr)->capture_default_str();
  train_sub->add_option("--batch-size", tr.batch_size)->capture_default_str();
  train_sub->add_option("--epochs", tr.epochs);
  train_sub->add_option("--l2", tr.l2)->capture_default_str();
  train_sub->add_flag("--no-select-best", tr.no_select_best,
                      "Keep the last epoch instead of the best validation epoch");

  SweepArgs sw;
  auto* sweep_sub = app.add_subcommand("sweep", "Run a train-size x retrieval-count x seed sweep");
  sweep_sub->add_option("--config", sw.config)->required();
  sweep_sub->add_option("--out", sw.out, "Override the config's output path");
  sweep_sub->add_option("--workers", sw.workers)->check(CLI::PositiveNumber);
  sweep_sub->add_flag("--resume", sw.resume, "Skip runs recorded in an existing runs file");

  StatsArgs st;
  auto* stats_sub = app.add_subcommand("stats", "Print pool statistics as JSON");
  stats_sub->add_option("--pool", st.pool)->required();
  stats_sub->add_option("--vectors", st.vectors);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*build_cmd) return build_index(build);
    if (*ret_cmd) return retrieve_cmd(ret);
    if (*train_sub) return train_cmd(tr);
    if (*sweep_sub) return sweep_cmd(sw);
    if (*stats_sub) return stats_cmd(st);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.message << '\n';
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kShortfall ? kExitShortfall : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
