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

// Straight-line reference implementations used only by tests. None of them
// call into the index, retriever, MMR or classifier code they check; they
// share only the plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "xlaug/classifier.hpp"
#include "xlaug/pool_store.hpp"

namespace xlaug::oracle {

/// Neumaier-compensated sum of squared differences, accumulated in long double.
inline double euclidean(std::span<const float> u, std::span<const float> v) {
  long double sum = 0.0L, carry = 0.0L;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const long double d = static_cast<long double>(u[i]) - static_cast<long double>(v[i]);
    const long double term = d * d;
    const long double t = sum + term;
    if (std::fabs(sum) >= std::fabs(term)) {
      carry += (sum - t) + term;
    } else {
      carry += (term - t) + sum;
    }
    sum = t;
  }
  return static_cast<double>(std::sqrt(sum + carry));
}

inline double plain_euclidean(std::span<const float> u, std::span<const float> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = static_cast<double>(u[i]) - static_cast<double>(v[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

inline double cosine(std::span<const float> u, std::span<const float> v) {
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += static_cast<double>(u[i]) * v[i];
    uu += static_cast<double>(u[i]) * u[i];
    vv += static_cast<double>(v[i]) * v[i];
  }
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

struct Hit {
  std::size_t row;
  double distance;
};

/// Exact top-k by sorting every candidate on (distance, row).
inline std::vector<Hit> topk(const Pool& pool, std::span<const std::size_t> rows,
                             std::span<const float> query, std::size_t k) {
  std::vector<Hit> all;
  for (std::size_t row : rows) all.push_back({row, plain_euclidean(query, pool.vector(row))});
  std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    return std::tie(a.distance, a.row) < std::tie(b.distance, b.row);
  });
  if (all.size() > k) all.resize(k);
  return all;
}

struct RetrievedRow {
  std::size_t row;
  std::size_t query;
  std::size_t rank;
  double distance;
};

/// Plain retrieval: per-query exact top-k, union, dedup by text keeping the
/// smallest (distance, row, query) occurrence, doubling k on shortfall, then
/// global (distance, row) truncation. nullopt means the view ran out.
inline std::optional<std::vector<RetrievedRow>> retrieve(
    const Pool& pool, std::span<const std::size_t> view_rows, const VectorBlock& queries,
    std::size_t total_r, const std::set<std::string>& exclude_languages,
    const std::set<std::string>& exclude_tasks, std::optional<std::size_t> k_init) {
  const std::size_t m = queries.count();
  const std::size_t n = view_rows.size();
  std::size_t k = k_init ? *k_init : (total_r + m - 1) / m;
  for (;;) {
    const std::size_t kk = std::min(k, n);
    std::map<std::string, RetrievedRow> best;
    for (std::size_t q = 0; q < m; ++q) {
      const auto hits = topk(pool, view_rows, queries.row(q), kk);
      for (std::size_t r = 0; r < hits.size(); ++r) {
        const Instance& inst = pool.instances[hits[r].row];
        if (exclude_languages.count(inst.language) || exclude_tasks.count(inst.source_task)) {
          continue;
        }
        const RetrievedRow cand{hits[r].row, q, r, hits[r].distance};
        auto it = best.find(inst.text);
        if (it == best.end()) {
          best.emplace(inst.text, cand);
        } else if (std::tie(cand.distance, cand.row, cand.query) <
                   std::tie(it->second.distance, it->second.row, it->second.query)) {
          it->second = cand;
        }
      }
    }
    if (best.size() >= total_r) {
      std::vector<RetrievedRow> out;
      for (const auto& entry : best) out.push_back(entry.second);
      std::sort(out.begin(), out.end(), [](const RetrievedRow& a, const RetrievedRow& b) {
        return std::tie(a.distance, a.row, a.query) < std::tie(b.distance, b.row, b.query);
      });
      out.resize(total_r);
      return out;
    }
    if (kk >= n) return std::nullopt;
    k = 2 * kk;
  }
}

/// Greedy MMR recomputing every score from scratch at each step.
inline std::vector<std::size_t> mmr(std::span<const float> query,
                                    const std::vector<std::pair<std::size_t, std::vector<float>>>& cands,
                                    std::size_t k, double lambda) {
  std::vector<std::size_t> selected;  // positions into cands
  std::vector<std::size_t> rows;
  while (selected.size() < k) {
    std::optional<std::size_t> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (std::find(selected.begin(), selected.end(), i) != selected.end()) continue;
      double score = cosine(cands[i].second, query);
      if (!selected.empty()) {
        double redundancy = -std::numeric_limits<double>::infinity();
        for (std::size_t s : selected) {
          redundancy = std::max(redundancy, cosine(cands[i].second, cands[s].second));
        }
        score = lambda * score - (1.0 - lambda) * redundancy;
      }
      if (!best || score > best_score ||
          (score == best_score && cands[i].first < cands[*best].first)) {
        best = i;
        best_score = score;
      }
    }
    selected.push_back(*best);
    rows.push_back(cands[*best].first);
  }
  return rows;
}

/// Direct transcription of the loss, clamp included.
inline double bce(const LinearModel& model, const LabeledData& data, double l2) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double z = model.bias;
    const auto x = data.x(i);
    for (std::size_t j = 0; j < x.size(); ++j) z += model.weights[j] * x[j];
    double p = 1.0 / (1.0 + std::exp(-z));
    p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
    total += data.y(i) * std::log(p) + (1 - data.y(i)) * std::log(1.0 - p);
  }
  double wsq = 0.0;
  for (double w : model.weights) wsq += w * w;
  return -total / static_cast<double>(data.size()) + l2 * wsq;
}

struct NumericGradient {
  std::vector<double> weights;
  double bias;
};

/// Central differences of `bce` with step h.
inline NumericGradient finite_difference(const LinearModel& model, const LabeledData& data,
                                         double l2, double h) {
  NumericGradient g{std::vector<double>(model.dim()), 0.0};
  LinearModel probe = model;
  for (std::size_t j = 0; j < model.dim(); ++j) {
    probe.weights[j] = model.weights[j] + h;
    const double up = bce(probe, data, l2);
    probe.weights[j] = model.weights[j] - h;
    const double down = bce(probe, data, l2);
    probe.weights[j] = model.weights[j];
    g.weights[j] = (up - down) / (2.0 * h);
  }
  probe.bias = model.bias + h;
  const double up = bce(probe, data, l2);
  probe.bias = model.bias - h;
  const double down = bce(probe, data, l2);
  g.bias = (up - down) / (2.0 * h);
  return g;
}

/// Per-class F1 as 2TP / (2TP + FP + FN), 0 when the denominator is 0.
inline double f1_macro(std::span<const int> predicted, std::span<const int> actual) {
  double sum = 0.0;
  for (int c = 0; c <= 1; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      if (predicted[i] == c && actual[i] == c) ++tp;
      if (predicted[i] == c && actual[i] != c) ++fp;
      if (predicted[i] != c && actual[i] == c) ++fn;
    }
    const double denom = 2 * tp + fp + fn;
    sum += denom == 0 ? 0.0 : 2 * tp / denom;
  }
  return sum / 2.0;
}

}  // namespace xlaug::oracle
