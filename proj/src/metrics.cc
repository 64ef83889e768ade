/*
 * Copyright 2026 The tabsel Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tabsel/metrics.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tabsel/ops.h"

namespace tabsel {

Metric ParseMetric(const std::string& name) {
  if (name == "accuracy") return Metric::kAccuracy;
  if (name == "auc") return Metric::kAuc;
  if (name == "mse") return Metric::kMse;
  throw std::invalid_argument("unknown metric '" + name +
                              "' (expected accuracy, auc or mse)");
}

std::string MetricName(Metric m) {
  switch (m) {
    case Metric::kAccuracy:
      return "accuracy";
    case Metric::kAuc:
      return "auc";
    case Metric::kMse:
      return "mse";
  }
  return "?";
}

bool HigherIsBetter(Metric m) { return m != Metric::kMse; }

Metric DefaultMetric(const TargetSpec& target) {
  if (target.task == TaskKind::kRegression) return Metric::kMse;
  return target.outputs == 2 ? Metric::kAuc : Metric::kAccuracy;
}

Real Accuracy(const Matrix& logits, std::span<const Real> labels) {
  if (labels.size() != logits.rows())
    throw ShapeError("accuracy: label count does not match logits " +
                     logits.ShapeString());
  if (labels.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const auto row = logits.row(b);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (static_cast<Real>(best) == labels[b]) ++hits;
  }
  return static_cast<Real>(hits) / static_cast<Real>(labels.size());
}

Real Auc(std::span<const Real> scores, std::span<const Real> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: score and label counts differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Sum of (1-based) midranks of the positives.
  Real positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const Real midrank = 0.5 * static_cast<Real>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0.0 && labels[order[k]] != 1.0)
        throw std::invalid_argument("auc: labels must be 0 or 1");
      if (labels[order[k]] == 1.0) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw std::domain_error("auc undefined: labels contain a single class");
  const Real p = static_cast<Real>(positives);
  const Real u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<Real>(negatives));
}

Real MeanSquaredError(const Matrix& predictions, const Matrix& targets) {
  RequireSameShape(predictions, targets, "mse");
  if (predictions.empty()) throw std::invalid_argument("mse of an empty set");
  Real total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Real e = predictions[i] - targets[i];
    total += e * e;
  }
  return total / static_cast<Real>(predictions.size());
}

std::vector<Real> PositiveClassScores(const Matrix& logits) {
  if (logits.cols() < 2)
    throw ShapeError("positive-class scores need >= 2 logits per row");
  std::vector<Real> s(logits.rows());
  if (logits.cols() == 2) {
    // Monotone in p(class 1) and free of softmax saturation ties.
    for (std::size_t b = 0; b < logits.rows(); ++b)
      s[b] = logits(b, 1) - logits(b, 0);
    return s;
  }
  const Matrix p = SoftmaxRows(logits);
  for (std::size_t b = 0; b < p.rows(); ++b) s[b] = p(b, 1);
  return s;
}

}  // namespace tabsel
