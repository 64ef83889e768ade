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

#include "tabsel/train.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "tabsel/log.h"
#include "tabsel/ops.h"

namespace tabsel {

ModelSnapshot ModelSnapshot::Capture(AttentiveModel& model) {
  ModelSnapshot s;
  for (Parameter* p : model.parameters()) s.params.push_back(p->value);
  for (BnStats* st : model.running_stats()) s.stats.push_back(*st);
  return s;
}

void ModelSnapshot::Restore(AttentiveModel& model) const {
  auto params = model.parameters();
  auto sites = model.running_stats();
  if (params.size() != this->params.size() || sites.size() != stats.size())
    throw std::logic_error("snapshot does not match the model");
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = this->params[k];
  for (std::size_t k = 0; k < sites.size(); ++k) *sites[k] = stats[k];
}

Matrix Predict(AttentiveModel& model, const Matrix& features, std::size_t chunk_rows) {
  if (features.rows() == 0) throw std::invalid_argument("cannot predict on zero rows");
  if (chunk_rows == 0) chunk_rows = features.rows();
  Matrix out;
  for (std::size_t start = 0; start < features.rows(); start += chunk_rows) {
    const std::size_t n = std::min(chunk_rows, features.rows() - start);
    Matrix part = model.Run(features.RowSlice(start, start + n), Mode::kInfer).predictions;
    if (out.empty()) out = Matrix(features.rows(), part.cols());
    for (std::size_t i = 0; i < n; ++i)
      std::copy(part.row(i).begin(), part.row(i).end(), out.row(start + i).begin());
  }
  return out;
}

Real Evaluate(AttentiveModel& model, const Dataset& data, Metric metric) {
  if (data.rows() == 0) throw std::invalid_argument("cannot evaluate on an empty dataset");
  if (data.targets.empty()) throw std::invalid_argument("evaluation needs labeled data");
  const bool regression = model.schema().target.task == TaskKind::kRegression;
  if (regression != (metric == Metric::kMse)) {
    throw std::invalid_argument("metric " + MetricName(metric) +
                                " does not match the target task");
  }
  const Matrix pred = Predict(model, data.features);
  switch (metric) {
    case Metric::kAccuracy: return Accuracy(pred, data.targets.values());
    case Metric::kAuc: {
      const auto scores = PositiveClassScores(pred);
      return Auc(scores, data.targets.values());
    }
    case Metric::kMse: return MeanSquaredError(pred, data.targets);
  }
  throw std::invalid_argument("bad metric");
}

TrainResult Train(AttentiveModel& model, const Dataset& train, const Dataset* valid,
                  const TrainOptions& options) {
  std::string why;
  if (!train.schema.CompatibleWith(model.schema(), &why))
    throw std::invalid_argument("training data does not match the model schema: " + why);
  if (train.targets.empty()) throw std::invalid_argument("training data has no targets");
  if (options.max_iterations == 0) throw std::invalid_argument("max_iterations must be positive");

  TrainResult result;
  result.metric = options.metric.value_or(DefaultMetric(model.schema().target));
  const bool higher = HigherIsBetter(result.metric);
  const ModelConfig& cfg = model.config();
  auto params = model.parameters();
  Adam adam(params);
  BatchIterator batches(train, cfg.batch_size, /*shuffle=*/true, options.seed);

  std::optional<ModelSnapshot> best;
  std::size_t stale_periods = 0;
  Real loss_sum = 0.0;
  std::size_t loss_count = 0;
  auto sites = model.running_stats();
  std::vector<BnStats> last_stats(sites.size());

  auto record = [&](std::size_t iteration) {
    HistoryEntry e;
    e.iteration = iteration;
    e.lr = options.schedule.At(iteration - 1);
    e.train_loss = loss_count ? loss_sum / static_cast<Real>(loss_count)
                              : std::numeric_limits<Real>::quiet_NaN();
    e.valid_metric = std::numeric_limits<Real>::quiet_NaN();
    loss_sum = 0.0;
    loss_count = 0;
    if (valid != nullptr) {
      e.valid_metric = Evaluate(model, *valid, result.metric);
      const bool improved = result.best_iteration == 0 ||
                            (higher ? e.valid_metric > result.best_metric
                                    : e.valid_metric < result.best_metric);
      if (improved) {
        if (options.restore_best) best = ModelSnapshot::Capture(model);
        result.best_metric = e.valid_metric;
        result.best_iteration = iteration;
        stale_periods = 0;
      } else {
        ++stale_periods;
      }
    }
    result.history.push_back(e);
  };

  for (std::size_t t = 0; t < options.max_iterations; ++t) {
    for (std::size_t k = 0; k < sites.size(); ++k) last_stats[k] = *sites[k];
    const auto batch = batches.Next();
    Real loss_value = 0.0;
    try {
      Tape tape;
      EncoderGraph g = model.Forward(tape, tape.Constant(batch.features), Mode::kTrain);
      Var loss = SupervisedLoss(g.predictions, batch.targets, model.schema().target,
                                cfg.lambda_sparse, g.sparse_loss);
      loss_value = loss.value()[0];
      if (!std::isfinite(loss_value))
        throw NonFiniteError("training loss is " + std::to_string(loss_value));
      adam.ZeroGrad();
      tape.Backward(loss);
      if (options.clip_norm > 0.0) ClipGradNorm(params, options.clip_norm);
      adam.Step(options.schedule.At(t));
    } catch (const NonFiniteError& e) {
      for (std::size_t k = 0; k < sites.size(); ++k) *sites[k] = last_stats[k];
      result.diverged = true;
      result.divergence_reason = "iteration " + std::to_string(t) + ": " + e.what();
      Warn("training aborted, " + result.divergence_reason);
      break;
    }
    loss_sum += loss_value;
    ++loss_count;
    result.iterations = t + 1;
    const bool last = t + 1 == options.max_iterations;
    if ((options.eval_every > 0 && (t + 1) % options.eval_every == 0) || last) {
      record(t + 1);
      if (valid != nullptr && options.patience > 0 && stale_periods >= options.patience) {
        result.stopped_early = !last;
        break;
      }
    }
  }
  if (best) best->Restore(model);
  return result;
}

void WriteHistory(const std::string& path, const std::vector<HistoryEntry>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17) << "iteration,lr,train_loss,valid_metric\n";
  for (const auto& e : history)
    out << e.iteration << "," << e.lr << "," << e.train_loss << "," << e.valid_metric << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace tabsel
