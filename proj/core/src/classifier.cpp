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
#include "xlaug/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "xlaug/error.hpp"
#include "xlaug/metrics.hpp"
#include "xlaug/random.hpp"

namespace xlaug {
namespace {

constexpr std::string_view kModelMagic = "xlaug-linear-model";

void check_dim(const LinearModel& model, std::size_t dim) {
  if (model.dim() != dim) {
    throw Error(ErrorKind::kDimMismatch, "model dim " + std::to_string(model.dim()) +
                                             " vs data dim " + std::to_string(dim));
  }
}

double logit(const LinearModel& model, std::span<const float> x) {
  double z = model.bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += model.weights[j] * static_cast<double>(x[j]);
  return z;
}

double weight_norm_sq(const LinearModel& model) {
  double s = 0.0;
  for (double w : model.weights) s += w * w;
  return s;
}

}  // namespace

void LabeledData::add(std::span<const float> x, int label) {
  if (label != 0 && label != 1) throw Error(ErrorKind::kInvalidArgument, "label must be 0 or 1");
  if (features_.dim() == 0 && features_.empty()) features_ = VectorBlock(x.size());
  features_.append(x);
  labels_.push_back(label);
}

std::size_t TrainConfig::epochs_for(std::size_t train_count) const {
  if (epochs) return *epochs;
  return train_count < 10000 ? 10 : 5;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kInvalidArgument, "learning_rate must be > 0");
  if (batch_size < 1) throw Error(ErrorKind::kInvalidArgument, "batch_size must be >= 1");
  if (epochs && *epochs < 1) throw Error(ErrorKind::kInvalidArgument, "epochs must be >= 1");
  if (!(l2 >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "l2 must be >= 0");
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_loss(const LinearModel& model, const LabeledData& data, double l2) {
  if (data.empty()) throw Error(ErrorKind::kEmptyData, "loss over empty data");
  check_dim(model, data.dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double p =
        std::clamp(sigmoid(logit(model, data.x(i))), kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum += data.y(i) == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(data.size()) + l2 * weight_norm_sq(model);
}

Gradient grad(const LinearModel& model, const LabeledData& data, double l2,
              std::span<const std::size_t> batch) {
  if (data.empty()) throw Error(ErrorKind::kEmptyData, "gradient over empty data");
  check_dim(model, data.dim());
  std::vector<std::size_t> all;
  if (batch.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    batch = all;
  }
  Gradient g;
  g.weights.assign(model.dim(), 0.0);
  for (std::size_t i : batch) {
    const auto x = data.x(i);
    const double residual = sigmoid(logit(model, x)) - static_cast<double>(data.y(i));
    for (std::size_t j = 0; j < x.size(); ++j) g.weights[j] += residual * static_cast<double>(x[j]);
    g.bias += residual;
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t j = 0; j < g.weights.size(); ++j) {
    g.weights[j] = g.weights[j] * scale + 2.0 * l2 * model.weights[j];
  }
  g.bias *= scale;
  return g;
}

double predict(const LinearModel& model, std::span<const float> x) {
  check_dim(model, x.size());
  return sigmoid(logit(model, x));
}

int predict_label(const LinearModel& model, std::span<const float> x) {
  return predict(model, x) >= 0.5 ? 1 : 0;
}

std::vector<int> predict_labels(const LinearModel& model, const LabeledData& data) {
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict_label(model, data.x(i));
  return out;
}

TrainResult train(const LabeledData& train_set, const LabeledData& val_set,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorKind::kEmptyData, "empty training set");
  if (!val_set.empty() && val_set.dim() != train_set.dim()) {
    throw Error(ErrorKind::kDimMismatch, "validation dim " + std::to_string(val_set.dim()) +
                                             " vs training dim " +
                                             std::to_string(train_set.dim()));
  }

  TrainResult result;
  LinearModel model(train_set.dim());
  const auto labels = train_set.labels();
  result.history.single_label =
      std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels.front(); });

  Rng rng(config.rng_seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::optional<double> best_f1;
  const std::size_t epochs = config.epochs_for(train_set.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(start + config.batch_size, order.size());
      const Gradient g =
          grad(model, train_set, config.l2, std::span(order).subspan(start, stop - start));
      for (std::size_t j = 0; j < model.dim(); ++j) {
        model.weights[j] -= config.learning_rate * g.weights[j];
      }
      model.bias -= config.learning_rate * g.bias;
    }

    EpochRecord record;
    record.train_loss = bce_loss(model, train_set, config.l2);
    if (!val_set.empty()) {
      record.val_f1_macro = f1_macro(predict_labels(model, val_set), val_set.labels());
    }
    result.history.epochs.push_back(record);

    const bool track_best = config.select_best_on_validation && record.val_f1_macro;
    if (!track_best || !best_f1 || *record.val_f1_macro > *best_f1) {
      if (track_best) best_f1 = record.val_f1_macro;
      result.model = model;
      result.history.selected_epoch = epoch;
    }
  }
  return result;
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kModelMagic << " 1\n" << "dim " << model.dim() << '\n' << std::hexfloat;
  out << "bias " << model.bias << '\n';
  for (double w : model.weights) out << w << '\n';
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIoFailure, "cannot open for writing " + path.string());
  file << out.str();
  file.flush();
  if (!file) throw Error(ErrorKind::kIoFailure, "write failed: " + path.string());
}

LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  auto bad = [&](const std::string& why) {
    return Error(ErrorKind::kMalformedRecord, path.string() + ": " + why);
  };
  auto parse_double = [&](const std::string& token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size() || !std::isfinite(v)) {
      throw bad("bad number '" + token + "'");
    }
    return v;
  };

  std::string magic, version, key, token;
  std::size_t dim = 0;
  if (!(file >> magic >> version) || magic != kModelMagic || version != "1") {
    throw bad("not a model file");
  }
  if (!(file >> key >> dim) || key != "dim" || dim == 0) throw bad("missing dim");
  LinearModel model(dim);
  if (!(file >> key >> token) || key != "bias") throw bad("missing bias");
  model.bias = parse_double(token);
  for (double& w : model.weights) {
    if (!(file >> token)) throw bad("too few weights");
    w = parse_double(token);
  }
  if (file >> token) throw bad("trailing data");
  return model;
}

}  // namespace xlaug
