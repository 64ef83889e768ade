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

#ifndef TABSEL_TRAIN_H_
#define TABSEL_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabsel/dataset.h"
#include "tabsel/encoder.h"
#include "tabsel/metrics.h"
#include "tabsel/optimizer.h"

namespace tabsel {

// Copy of every parameter value and batch-norm running statistic.
struct ModelSnapshot {
  std::vector<Matrix> params;
  std::vector<BnStats> stats;

  static ModelSnapshot Capture(AttentiveModel& model);
  void Restore(AttentiveModel& model) const;
};

struct TrainOptions {
  LrSchedule schedule;
  std::size_t max_iterations = 1000;
  // Validation period in iterations (0 evaluates only at the end).
  std::size_t eval_every = 100;
  // Stop after this many validation periods without improvement (0: never).
  std::size_t patience = 20;
  // Global gradient-norm cap; 0 disables clipping.
  Real clip_norm = 0.0;
  // With validation data, end on the best-scoring state rather than the last.
  bool restore_best = true;
  // Drives batch order.
  std::uint64_t seed = 0;
  // Defaults to DefaultMetric(schema.target).
  std::optional<Metric> metric;
};

struct HistoryEntry {
  std::size_t iteration = 0;  // iterations completed
  Real lr = 0.0;
  Real train_loss = 0.0;      // mean batch loss since the previous entry
  Real valid_metric = 0.0;    // NaN without validation data
};

struct TrainResult {
  std::vector<HistoryEntry> history;
  Metric metric = Metric::kAccuracy;
  std::size_t iterations = 0;
  // Iteration of the retained best-on-validation state (0 without validation).
  std::size_t best_iteration = 0;
  Real best_metric = 0.0;
  bool stopped_early = false;
  // Set when a non-finite loss or gradient aborted training; the model then
  // holds the best validated state, or the last finite one.
  bool diverged = false;
  std::string divergence_reason;
};

// Supervised training (also fine-tuning) with Adam and the staircase
// schedule. With validation data the best-scoring state is restored at the
// end. Deterministic given the model's initial state and options.seed.
TrainResult Train(AttentiveModel& model, const Dataset& train,
                  const Dataset* valid, const TrainOptions& options);

// Infer-mode predictions, computed in row chunks.
Matrix Predict(AttentiveModel& model, const Matrix& features,
               std::size_t chunk_rows = 4096);

// Metric on labeled data, infer mode.
Real Evaluate(AttentiveModel& model, const Dataset& data, Metric metric);

// "iteration,lr,train_loss,valid_metric" rows with a header.
void WriteHistory(const std::string& path, const std::vector<HistoryEntry>& history);

}  // namespace tabsel

#endif  // TABSEL_TRAIN_H_
