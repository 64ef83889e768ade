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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tabsel/interpret.h"
#include "tabsel/metrics.h"
#include "tabsel/optimizer.h"
#include "tabsel/synthetic.h"
#include "tabsel/train.h"

namespace tabsel {
namespace {

TEST(Adam, HandSteppedTrace) {
  Parameter w("w", Matrix(1, 1, 1.0));
  Adam adam({&w});
  const Real grads[] = {0.5, -1.0, 2.0};
  const Real expected[] = {0.900000002, 0.9366103542405654, 0.8946447927181046};
  for (int t = 0; t < 3; ++t) {
    w.grad = Matrix(1, 1, grads[t]);
    adam.Step(0.1);
    EXPECT_NEAR(w.value[0], expected[t], 1e-12) << t;
  }
  EXPECT_EQ(adam.step_count(), 3u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Parameter w("w", Matrix::FromRows({{1.5, -2}}));
  Adam adam({&w});
  for (int t = 0; t < 5; ++t) {
    adam.ZeroGrad();
    adam.Step(0.01);
  }
  EXPECT_EQ(w.value, Matrix::FromRows({{1.5, -2}}));
}

TEST(Adam, ConstantGradientStepsApproachLearningRate) {
  Parameter w("w", Matrix(1, 1, 0.0));
  Adam adam({&w});
  Real previous = 0;
  for (int t = 0; t < 200; ++t) {
    w.grad = Matrix(1, 1, 3.0);
    adam.Step(0.01);
    const Real step = previous - w.value[0];
    EXPECT_NEAR(step, 0.01, 1e-9);
    previous = w.value[0];
  }
}

TEST(Adam, ScaledGradientsKeepSignsAndBound) {
  std::mt19937_64 rng(1);
  std::normal_distribution<Real> n(0, 1);
  Matrix g(1, 6);
  for (auto& v : g.values()) v = n(rng);
  for (Real scale : {1e-3, 1.0, 1e3}) {
    Parameter w("w", Matrix(1, 6));
    Adam adam({&w});
    Matrix scaled = g;
    for (auto& v : scaled.values()) v *= scale;
    w.grad = scaled;
    adam.Step(0.05);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ(std::signbit(w.value[i]), !std::signbit(g[i]));
      EXPECT_LE(std::abs(w.value[i]), 0.05 * (1 + 1e-6));
    }
  }
}

TEST(Adam, NonFiniteGradientAbortsBeforeUpdate) {
  Parameter a("a", Matrix(1, 1, 1.0)), b("b", Matrix(1, 1, 1.0));
  Adam adam({&a, &b});
  a.grad = Matrix(1, 1, 1.0);
  b.grad = Matrix(1, 1, std::nan(""));
  try {
    adam.Step(0.1);
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_EQ(a.value[0], 1.0);
}

TEST(LrSchedule, Staircase) {
  const LrSchedule s{0.02, 0.95, 500};
  EXPECT_EQ(s.At(0), 0.02);
  EXPECT_EQ(s.At(499), 0.02);
  EXPECT_NEAR(s.At(1000), 0.01805, 1e-15);
  for (std::size_t t = 1; t < 5000; ++t) EXPECT_LE(s.At(t), s.At(t - 1));
}

TEST(ClipGradNorm, RescalesOnlyAboveCap) {
  Parameter p("p", Matrix(1, 2));
  p.grad = Matrix::FromRows({{3, 4}});
  EXPECT_EQ(ClipGradNorm({&p}, 10.0), 5.0);
  EXPECT_EQ(p.grad, Matrix::FromRows({{3, 4}}));
  ClipGradNorm({&p}, 1.0);
  EXPECT_NEAR(p.grad[0], 0.6, 1e-15);
  EXPECT_NEAR(p.grad[1], 0.8, 1e-15);
}

Real BruteForceAuc(const std::vector<Real>& scores, const std::vector<Real>& labels) {
  Real wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (labels[i] == 1 && labels[j] == 0) {
        pairs += 1;
        wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
      }
  return wins / pairs;
}

TEST(Auc, Examples) {
  EXPECT_EQ(Auc(std::vector<Real>{0.9, 0.8, 0.4, 0.2}, std::vector<Real>{1, 0, 1, 0}), 0.75);
  EXPECT_EQ(Auc(std::vector<Real>{3, 2, 1, 0}, std::vector<Real>{1, 1, 0, 0}), 1.0);
  EXPECT_EQ(Auc(std::vector<Real>(6, 0.3), std::vector<Real>{1, 0, 1, 0, 0, 1}), 0.5);
  EXPECT_THROW(Auc(std::vector<Real>{1, 2}, std::vector<Real>{1, 1}), std::domain_error);
}

TEST(Auc, MatchesAllPairsWithTies) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(0, 9);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + trial * 3;
    std::vector<Real> scores(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = coarse(rng) / 4.0;
      labels[i] = coin(rng) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    EXPECT_EQ(Auc(scores, labels), BruteForceAuc(scores, labels));
  }
}

TEST(Accuracy, InvariantToMonotoneTransform) {
  std::mt19937_64 rng(3);
  std::normal_distribution<Real> n(0, 1);
  Matrix logits(40, 3);
  std::vector<Real> labels(40);
  for (auto& v : logits.values()) v = n(rng);
  for (std::size_t i = 0; i < 40; ++i) labels[i] = static_cast<Real>(i % 3);
  Matrix transformed = logits;
  for (auto& v : transformed.values()) v = std::exp(2 * v) + 5;
  EXPECT_EQ(Accuracy(logits, labels), Accuracy(transformed, labels));
}

TEST(Metrics, NamesAndDirections) {
  EXPECT_EQ(ParseMetric("auc"), Metric::kAuc);
  EXPECT_EQ(MetricName(Metric::kMse), "mse");
  EXPECT_TRUE(HigherIsBetter(Metric::kAccuracy));
  EXPECT_FALSE(HigherIsBetter(Metric::kMse));
  EXPECT_THROW(ParseMetric("f1"), std::invalid_argument);
}

Dataset Separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<Real> g(0, 1);
  Dataset d;
  d.schema = FeatureSchema::Numeric(2, TargetSpec{});
  d.features = Matrix(n, 2);
  d.targets = Matrix(n, 1);
  for (std::size_t i = 0; i < n;) {
    const Real a = g(rng), b = g(rng);
    if (std::abs(a + b) < 0.1) continue;
    d.features(i, 0) = a;
    d.features(i, 1) = b;
    d.targets(i, 0) = a + b > 0 ? 1 : 0;
    ++i;
  }
  return d;
}

ModelConfig SmallConfig() {
  ModelConfig c;
  c.n_d = c.n_a = 8;
  c.n_steps = 3;
  c.gamma = 1.5;
  c.batch_size = 256;
  c.virtual_batch_size = 64;
  c.momentum = 0.9;
  c.lambda_sparse = 0.001;
  return c;
}

TEST(Train, SeparableToyReachesHighAccuracy) {
  const Dataset d = Separable(1000, 1);
  AttentiveModel model(d.schema, SmallConfig(), 1);
  TrainOptions opts;
  opts.max_iterations = 2000;
  opts.schedule = {0.02, 0.9, 500};
  opts.eval_every = 0;
  const TrainResult r = Train(model, d, nullptr, opts);
  EXPECT_FALSE(r.diverged);
  EXPECT_GE(Evaluate(model, d, Metric::kAccuracy), 0.99);
}

TEST(Train, SameSeedSameHistory) {
  const Dataset d = GenerateSynthetic(SynKind::kSyn1, 1200, 2);
  const DataSplit s = Split(d, {0.8, 0.2, 0.0}, 1);
  auto run = [&] {
    AttentiveModel model(d.schema, SmallConfig(), 3);
    TrainOptions opts;
    opts.max_iterations = 60;
    opts.eval_every = 20;
    opts.seed = 4;
    opts.metric = Metric::kAuc;
    return Train(model, s.train, &s.valid, opts).history;
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].iteration, b[i].iteration);
    EXPECT_EQ(a[i].train_loss, b[i].train_loss);
    EXPECT_EQ(a[i].valid_metric, b[i].valid_metric);
  }
}

TEST(Train, SparsityWeightLowersMaskEntropy) {
  const Dataset d = GenerateSynthetic(SynKind::kSyn2, 2000, 5);
  auto entropy = [&](Real lambda) {
    ModelConfig cfg = SmallConfig();
    cfg.lambda_sparse = lambda;
    AttentiveModel model(d.schema, cfg, 6);
    TrainOptions opts;
    opts.max_iterations = 300;
    opts.eval_every = 0;
    Train(model, d, nullptr, opts);
    return MeanMaskEntropy(model.Run(d.features, Mode::kInfer).trace);
  };
  EXPECT_LT(entropy(0.01), entropy(0.0));
}

TEST(Train, NonFiniteLossStopsAndKeepsStatistics) {
  Dataset d = GenerateSynthetic(SynKind::kSyn2, 300, 7);
  for (std::size_t i = 0; i < d.rows(); ++i) d.features(i, 3) = std::nan("");
  AttentiveModel model(d.schema, SmallConfig(), 8);
  TrainOptions opts;
  opts.max_iterations = 10;
  const TrainResult r = Train(model, d, nullptr, opts);
  EXPECT_TRUE(r.diverged);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_FALSE(r.divergence_reason.empty());
  EXPECT_FALSE(model.input_bn.stats.ready);
}

TEST(Train, PatienceStopsEarlyAndRestoresBest) {
  const Dataset d = GenerateSynthetic(SynKind::kSyn2, 1000, 9);
  const DataSplit s = Split(d, {0.7, 0.3, 0.0}, 2);
  AttentiveModel model(d.schema, SmallConfig(), 10);
  TrainOptions opts;
  opts.max_iterations = 5000;
  opts.eval_every = 10;
  opts.patience = 2;
  opts.metric = Metric::kAuc;
  const TrainResult r = Train(model, s.train, &s.valid, opts);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_LT(r.iterations, 5000u);
  EXPECT_EQ(Evaluate(model, s.valid, Metric::kAuc), r.best_metric);
}

TEST(Evaluate, MetricMustMatchTask) {
  const Dataset d = GenerateSynthetic(SynKind::kSyn2, 50, 9);
  AttentiveModel model(d.schema, SmallConfig(), 1);
  model.Run(d.features, Mode::kTrain);
  EXPECT_THROW(Evaluate(model, d, Metric::kMse), std::invalid_argument);
  EXPECT_THROW(Evaluate(model, Dataset{d.schema, Matrix(0, 11), Matrix(0, 1)}, Metric::kAuc),
               std::invalid_argument);
}

}  // namespace
}  // namespace tabsel
