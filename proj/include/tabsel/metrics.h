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

#ifndef TABSEL_METRICS_H_
#define TABSEL_METRICS_H_

#include <optional>
#include <span>
#include <string>

#include "tabsel/matrix.h"
#include "tabsel/schema.h"

namespace tabsel {

enum class Metric { kAccuracy, kAuc, kMse };

Metric ParseMetric(const std::string& name);
std::string MetricName(Metric m);
// Larger is better for accuracy and AUC, smaller for MSE.
bool HigherIsBetter(Metric m);
Metric DefaultMetric(const TargetSpec& target);

// Fraction of rows whose argmax column equals the label.
Real Accuracy(const Matrix& logits, std::span<const Real> labels);

// Area under the ROC curve from the Mann-Whitney U statistic with midranks
// for tied scores. Labels are 0/1; throws if only one class is present.
Real Auc(std::span<const Real> scores, std::span<const Real> labels);

Real MeanSquaredError(const Matrix& predictions, const Matrix& targets);

// Positive-class score per row, monotone in the softmax probability of
// class 1 (the logit difference for two classes).
std::vector<Real> PositiveClassScores(const Matrix& logits);

}  // namespace tabsel

#endif  // TABSEL_METRICS_H_
