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

// Logistic probe over frozen embeddings, trained with mini-batch SGD on
//   L = -(1/|D|) sum [y log p + (1 - y) log(1 - p)] + l2 * ||w||^2,
//   p = sigmoid(w . x + b), clamped to [1e-12, 1 - 1e-12] inside the log.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "xlaug/pool_store.hpp"

namespace xlaug {

inline constexpr double kProbabilityClamp = 1e-12;

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  LinearModel() = default;
  explicit LinearModel(std::size_t dim) : weights(dim, 0.0) {}

  std::size_t dim() const noexcept { return weights.size(); }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Row-major float features with 0/1 labels.
class LabeledData {
 public:
  LabeledData() = default;
  explicit LabeledData(std::size_t dim) : features_(dim) {}

  void add(std::span<const float> x, int label);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t dim() const noexcept { return features_.dim(); }
  std::span<const float> x(std::size_t i) const { return features_.row(i); }
  int y(std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const noexcept { return labels_; }

 private:
  VectorBlock features_;
  std::vector<int> labels_;
};

struct Gradient {
  std::vector<double> weights;
  double bias = 0.0;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t batch_size = 16;
  std::optional<std::size_t> epochs;  // unset: 10 below 10,000 examples, else 5
  double l2 = 1e-4;
  std::uint64_t rng_seed = 0;
  bool select_best_on_validation = true;

  std::size_t epochs_for(std::size_t train_count) const;
  void validate() const;
};

struct EpochRecord {
  double train_loss = 0.0;
  std::optional<double> val_f1_macro;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t selected_epoch = 0;  // 0-based
  bool single_label = false;       // training data carried only one class
};

struct TrainResult {
  LinearModel model;
  TrainHistory history;
};

double sigmoid(double z) noexcept;

/// Mean clamped binary cross-entropy plus l2 * ||w||^2. Throws EmptyData,
/// DimMismatch.
double bce_loss(const LinearModel& model, const LabeledData& data, double l2);

/// Analytic gradient of bce_loss over `batch` (all rows when empty).
Gradient grad(const LinearModel& model, const LabeledData& data, double l2,
              std::span<const std::size_t> batch = {});

/// sigmoid(w . x + b).
double predict(const LinearModel& model, std::span<const float> x);

/// 1 iff predict(...) >= 0.5.
int predict_label(const LinearModel& model, std::span<const float> x);

std::vector<int> predict_labels(const LinearModel& model, const LabeledData& data);

TrainResult train(const LabeledData& train_set, const LabeledData& val_set,
                  const TrainConfig& config);

void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace xlaug
