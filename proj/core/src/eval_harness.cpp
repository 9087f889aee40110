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
#include "xlaug/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "xlaug/error.hpp"
#include "xlaug/random.hpp"

namespace xlaug {
namespace {

constexpr std::uint64_t kSubsampleStream = 0;
constexpr std::uint64_t kTrainStream = 1;

LabeledData gather(const Pool& pool, std::span<const std::size_t> rows) {
  LabeledData data(pool.dim());
  for (std::size_t row : rows) data.add(pool.vector(row), pool.instances[row].label);
  return data;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& field, std::size_t line_no) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::kMalformedRecord,
                "runs file line " + std::to_string(line_no) + ": bad number '" + field + "'",
                line_no);
  }
  return value;
}

std::string csv_header(std::span<const std::string> tasks) {
  std::string header = "train_size,retrieval_count,seed,f1_macro,wall_time_ms";
  for (const auto& task : tasks) header += ",prov_" + task;
  return header;
}

}  // namespace

double f1_macro(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorKind::kLengthMismatch, std::to_string(predicted.size()) + " predictions vs " +
                                                std::to_string(actual.size()) + " labels");
  }
  if (actual.empty()) throw Error(ErrorKind::kEmptyData, "no labels to score");
  double total = 0.0;
  for (int cls = 0; cls <= 1; ++cls) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      const bool p = predicted[i] == cls;
      const bool a = actual[i] == cls;
      tp += p && a;
      fp += p && !a;
      fn += !p && a;
    }
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double denom = precision + recall;
    total += denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
  }
  return total / 2.0;
}

Split split_target(std::size_t pool_size, std::size_t val_size, std::size_t test_size,
                   std::uint64_t split_seed) {
  if (val_size + test_size > pool_size) {
    throw Error(ErrorKind::kInsufficientData,
                "target has " + std::to_string(pool_size) + " rows, split needs " +
                    std::to_string(val_size + test_size));
  }
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(split_seed);
  rng.shuffle(std::span<std::size_t>(order));

  Split split;
  const auto first = order.begin();
  split.test.assign(first, first + static_cast<std::ptrdiff_t>(test_size));
  split.validation.assign(first + static_cast<std::ptrdiff_t>(test_size),
                          first + static_cast<std::ptrdiff_t>(test_size + val_size));
  split.reservoir.assign(first + static_cast<std::ptrdiff_t>(test_size + val_size), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.reservoir.begin(), split.reservoir.end());
  return split;
}

std::vector<std::size_t> subsample(std::span<const std::size_t> reservoir, std::size_t size,
                                   std::uint64_t seed) {
  if (size > reservoir.size()) {
    throw Error(ErrorKind::kInsufficientData,
                "cannot sample " + std::to_string(size) + " of " +
                    std::to_string(reservoir.size()) + " reservoir rows");
  }
  std::vector<std::size_t> pool(reservoir.begin(), reservoir.end());
  Rng rng(seed);
  // Partial Fisher-Yates: the first `size` slots end up a uniform sample.
  for (std::size_t i = 0; i < size; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void ExperimentConfig::validate() const {
  if (target_pool == nullptr) throw Error(ErrorKind::kInvalidArgument, "no target pool");
  if (train_sizes.empty() || retrieval_counts.empty() || seeds.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "train_sizes, retrieval_counts and seeds must be non-empty");
  }
  if (std::find(train_sizes.begin(), train_sizes.end(), 0) != train_sizes.end()) {
    throw Error(ErrorKind::kInvalidArgument, "train sizes must be positive");
  }
  const std::size_t largest = *std::max_element(train_sizes.begin(), train_sizes.end());
  if (val_size + test_size + largest > target_pool->size()) {
    throw Error(ErrorKind::kInsufficientData,
                "val_size + test_size + max(train_sizes) = " +
                    std::to_string(val_size + test_size + largest) + " exceeds " +
                    std::to_string(target_pool->size()) + " target rows");
  }
  if (test_size == 0) throw Error(ErrorKind::kInvalidArgument, "test_size must be positive");
  const bool retrieves = std::any_of(retrieval_counts.begin(), retrieval_counts.end(),
                                     [](std::size_t r) { return r > 0; });
  if (retrieves) {
    if (source_pool.empty()) throw Error(ErrorKind::kEmptyView, "source pool view is empty");
    if (source_pool.pool().dim() != target_pool->dim()) {
      throw Error(ErrorKind::kDimMismatch, "source dim " +
                                               std::to_string(source_pool.pool().dim()) +
                                               " vs target dim " +
                                               std::to_string(target_pool->dim()));
    }
    if (retrieval.mmr) retrieval.mmr->validate();
    hnsw.validate();
  }
  train.validate();
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  const Pool& target = *config_.target_pool;
  for (const Instance& inst : target.instances) {
    config_.retrieval.exclude_languages.insert(inst.language);
  }

  split_ = split_target(target.size(), config_.val_size, config_.test_size, config_.split_seed);
  validation_ = gather(target, split_.validation);
  test_ = gather(target, split_.test);

  if (!config_.source_pool.empty()) {
    const Pool& source = config_.source_pool.pool();
    std::vector<std::size_t> rows;
    std::set<std::string> tasks;
    for (std::size_t row : config_.source_pool.rows()) {
      const Instance& inst = source.instances[row];
      if (config_.retrieval.exclude_languages.contains(inst.language) ||
          config_.retrieval.exclude_tasks.contains(inst.source_task)) {
        continue;
      }
      rows.push_back(row);
      tasks.insert(inst.source_task);
    }
    retrieval_view_ = PoolView(source, std::move(rows));
    tasks_.assign(tasks.begin(), tasks.end());
  }

  const bool retrieves = std::any_of(config_.retrieval_counts.begin(),
                                     config_.retrieval_counts.end(),
                                     [](std::size_t r) { return r > 0; });
  if (retrieves) {
    if (retrieval_view_.empty()) {
      throw Error(ErrorKind::kEmptyView, "every source row is excluded for this target");
    }
    index_.emplace(AnnIndex::build(retrieval_view_, config_.hnsw));
  }
}

std::vector<std::size_t> Experiment::training_rows(std::size_t train_size,
                                                   std::uint64_t seed) const {
  return subsample(split_.reservoir, train_size, derive_seed(seed, kSubsampleStream));
}

ResultRow Experiment::run_condition(std::size_t train_size, std::size_t retrieval_count,
                                    std::uint64_t seed) const {
  const auto start = std::chrono::steady_clock::now();
  const Pool& target = *config_.target_pool;

  ResultRow row;
  row.train_size = train_size;
  row.retrieval_count = retrieval_count;
  row.seed = seed;
  for (const auto& task : tasks_) row.provenance[task] = 0;

  const auto subset = training_rows(train_size, seed);
  LabeledData train_set = gather(target, subset);

  if (retrieval_count > 0) {
    if (!index_) throw Error(ErrorKind::kInvalidArgument, "experiment has no retrieval index");
    VectorBlock queries(target.dim());
    for (std::size_t r : subset) queries.append(target.vector(r));
    RetrievalConfig retrieval = config_.retrieval;
    retrieval.total_r = retrieval_count;
    const RetrievedSet retrieved =
        retrieve(*index_, config_.source_pool.pool(), queries, retrieval);
    for (const RetrievedItem& item : retrieved.items) {
      train_set.add(config_.source_pool.pool().vector(item.row), item.instance.label);
      ++row.provenance[item.instance.source_task];
    }
  }
  row.training_examples = train_set.size();

  TrainConfig train_config = config_.train;
  train_config.rng_seed = derive_seed(seed, kTrainStream);
  const TrainResult trained = train(train_set, validation_, train_config);
  row.single_label = trained.history.single_label;
  row.f1_macro = f1_macro(predict_labels(trained.model, test_), test_.labels());

  if (config_.record_wall_time) {
    row.wall_time_ms = static_cast<double>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              start)
            .count());
  }
  return row;
}

SweepResult Experiment::sweep(const SweepOptions& options) const {
  struct Cell {
    std::size_t train_size, retrieval_count;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t size : config_.train_sizes) {
    for (std::size_t count : config_.retrieval_counts) {
      for (std::uint64_t seed : config_.seeds) cells.push_back({size, count, seed});
    }
  }

  std::vector<std::optional<ResultRow>> results(cells.size());
  for (const ResultRow& done : options.completed) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!results[i] && cells[i].train_size == done.train_size &&
          cells[i].retrieval_count == done.retrieval_count && cells[i].seed == done.seed) {
        results[i] = done;
        break;
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::optional<std::pair<std::size_t, std::exception_ptr>> first_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed.load()) return;
      if (results[i]) continue;
      try {
        results[i] = run_condition(cells[i].train_size, cells[i].retrieval_count, cells[i].seed);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error || i < first_error->first) {
          first_error.emplace(i, std::current_exception());
        }
        failed.store(true);
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, cells.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  }

  SweepResult result;
  result.tasks = tasks_;
  for (auto& r : results) {
    if (r) result.runs.push_back(std::move(*r));
  }
  if (first_error) {
    if (options.on_partial) options.on_partial(result.runs, cells.size());
    std::rethrow_exception(first_error->second);
  }
  summarize(result, config_.train_sizes, config_.retrieval_counts);
  return result;
}

void summarize(SweepResult& result, std::span<const std::size_t> train_sizes,
               std::span<const std::size_t> retrieval_counts) {
  result.cells.clear();
  result.averages.clear();
  for (std::size_t size : train_sizes) {
    for (std::size_t count : retrieval_counts) {
      SummaryRow cell;
      cell.train_size = size;
      cell.retrieval_count = count;
      for (const auto& task : result.tasks) cell.provenance[task] = 0.0;
      std::size_t n = 0;
      for (const ResultRow& run : result.runs) {
        if (run.train_size != size || run.retrieval_count != count) continue;
        ++n;
        cell.f1_macro += run.f1_macro;
        cell.wall_time_ms += run.wall_time_ms;
        for (const auto& [task, c] : run.provenance) cell.provenance[task] += static_cast<double>(c);
      }
      if (n > 0) {
        const auto d = static_cast<double>(n);
        cell.f1_macro /= d;
        cell.wall_time_ms /= d;
        for (auto& [task, c] : cell.provenance) c /= d;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  for (std::size_t count : retrieval_counts) {
    SummaryRow avg;
    avg.retrieval_count = count;
    for (const auto& task : result.tasks) avg.provenance[task] = 0.0;
    std::size_t n = 0;
    for (const SummaryRow& cell : result.cells) {
      if (cell.retrieval_count != count) continue;
      ++n;
      avg.f1_macro += cell.f1_macro;
      avg.wall_time_ms += cell.wall_time_ms;
      for (const auto& [task, c] : cell.provenance) avg.provenance[task] += c;
    }
    if (n > 0) {
      const auto d = static_cast<double>(n);
      avg.f1_macro /= d;
      avg.wall_time_ms /= d;
      for (auto& [task, c] : avg.provenance) c /= d;
    }
    result.averages.push_back(std::move(avg));
  }
}

std::vector<ProvenanceTable> provenance_report(std::span<const ResultRow> rows,
                                               const std::string& target, std::size_t top_n) {
  std::map<std::size_t, ProvenanceTable> by_count;
  std::map<std::size_t, std::map<std::string, double>> sums;
  for (const ResultRow& row : rows) {
    if (row.retrieval_count == 0) continue;
    ProvenanceTable& table = by_count[row.retrieval_count];
    table.target = target;
    table.retrieval_count = row.retrieval_count;
    ++table.runs;
    auto& sum = sums[row.retrieval_count];
    for (const auto& [task, c] : row.provenance) sum[task] += static_cast<double>(c);
  }

  std::vector<ProvenanceTable> out;
  for (auto& [count, table] : by_count) {
    const auto& sum = sums[count];
    double total = 0.0;
    for (const auto& [task, c] : sum) total += c;
    for (const auto& [task, c] : sum) {
      const double mean = c / static_cast<double>(table.runs);
      if (mean == 0.0) continue;
      table.entries.push_back({task, mean, total == 0.0 ? 0.0 : 100.0 * c / total});
    }
    std::sort(table.entries.begin(), table.entries.end(),
              [](const ProvenanceEntry& a, const ProvenanceEntry& b) {
                return a.mean_count > b.mean_count ||
                       (a.mean_count == b.mean_count && a.task < b.task);
              });
    if (top_n > 0 && table.entries.size() > top_n) table.entries.resize(top_n);
    out.push_back(std::move(table));
  }
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string results_csv(const SweepResult& result) {
  std::string out = csv_header(result.tasks) + '\n';
  auto emit = [&](const SummaryRow& row) {
    out += row.train_size ? std::to_string(*row.train_size) : std::string("AVG");
    out += ',' + std::to_string(row.retrieval_count) + ",mean," + format_double(row.f1_macro) +
           ',' + format_double(row.wall_time_ms);
    for (const auto& task : result.tasks) {
      const auto it = row.provenance.find(task);
      out += ',' + format_double(it == row.provenance.end() ? 0.0 : it->second);
    }
    out += '\n';
  };
  for (const SummaryRow& row : result.cells) emit(row);
  for (const SummaryRow& row : result.averages) emit(row);
  return out;
}

std::string runs_csv(std::span<const ResultRow> runs, std::span<const std::string> tasks) {
  std::string out = csv_header(tasks) + ",single_label\n";
  for (const ResultRow& row : runs) {
    out += std::to_string(row.train_size) + ',' + std::to_string(row.retrieval_count) + ',' +
           std::to_string(row.seed) + ',' + format_double(row.f1_macro) + ',' +
           format_double(row.wall_time_ms);
    for (const auto& task : tasks) {
      const auto it = row.provenance.find(task);
      out += ',' + std::to_string(it == row.provenance.end() ? 0 : it->second);
    }
    out += row.single_label ? ",1\n" : ",0\n";
  }
  return out;
}

std::pair<std::vector<ResultRow>, bool> parse_runs_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kMalformedRecord, "runs file is empty", 0);
  }
  const auto header = split_csv_line(line);
  if (header.size() < 6 || header[0] != "train_size" || header.back() != "single_label") {
    throw Error(ErrorKind::kMalformedRecord, "runs file has an unexpected header", 0);
  }
  std::vector<std::string> tasks;
  for (std::size_t i = 5; i + 1 < header.size(); ++i) {
    if (!header[i].starts_with("prov_")) {
      throw Error(ErrorKind::kMalformedRecord, "unexpected column " + header[i], 0);
    }
    tasks.push_back(header[i].substr(5));
  }

  std::vector<ResultRow> rows;
  bool partial = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with(kPartialMarker)) {
      partial = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::kMalformedRecord,
                  "runs file line " + std::to_string(line_no) + ": wrong field count", line_no);
    }
    ResultRow row;
    row.train_size = parse_number<std::size_t>(fields[0], line_no);
    row.retrieval_count = parse_number<std::size_t>(fields[1], line_no);
    row.seed = parse_number<std::uint64_t>(fields[2], line_no);
    row.f1_macro = parse_number<double>(fields[3], line_no);
    row.wall_time_ms = parse_number<double>(fields[4], line_no);
    std::size_t retrieved = 0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const auto c = parse_number<std::size_t>(fields[5 + t], line_no);
      row.provenance[tasks[t]] = c;
      retrieved += c;
    }
    row.training_examples = row.train_size + retrieved;
    row.single_label = fields.back() == "1";
    rows.push_back(std::move(row));
  }
  return {std::move(rows), partial};
}

std::string provenance_csv(std::span<const ProvenanceTable> tables) {
  std::string out = "target,retrieval_count,rank,task,mean_count,percent\n";
  for (const ProvenanceTable& table : tables) {
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
      const ProvenanceEntry& e = table.entries[i];
      out += table.target + ',' + std::to_string(table.retrieval_count) + ',' +
             std::to_string(i + 1) + ',' + e.task + ',' + format_double(e.mean_count) + ',' +
             format_double(e.percent) + '\n';
    }
  }
  return out;
}

}  // namespace xlaug
