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

#include "tabsel/grad_suite.h"

#include <random>
#include <stdexcept>

#include "tabsel/decoder.h"
#include "tabsel/encoder.h"
#include "tabsel/layers.h"
#include "tabsel/ops.h"
#include "tabsel/pretrain.h"

namespace tabsel {

namespace {

Matrix Random(std::size_t rows, std::size_t cols, Rng& rng, Real scale = 1.0) {
  std::normal_distribution<Real> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Real& v : m.values()) v = normal(rng);
  return m;
}

// Random linear functional of x, so every output entry gets a distinct weight.
Var Project(Tape& tape, Var x, const Matrix& weights) {
  return Sum(Mul(x, tape.Constant(weights)));
}

class Suite {
 public:
  Suite(const GradSuiteOptions& options) : options_(options), rng_(options.seed) {}

  void Check(const std::string& op, const LossBuilder& build,
             std::vector<Parameter*> params, Real tolerance) {
    GradCheckOptions o;
    o.tolerance = tolerance;
    reports_.push_back(GradCheck(op, build, params, o));
  }

  void Layers();
  void Encoder();
  void Decoder();
  void Fault();

  std::vector<GradReport> reports() && { return std::move(reports_); }

 private:
  GradSuiteOptions options_;
  Rng rng_;
  std::vector<GradReport> reports_;
};

void Suite::Layers() {
  const Real tol = options_.layer_tolerance;
  {
    Parameter a("a", Random(3, 4, rng_)), b("b", Random(4, 2, rng_));
    Matrix w = Random(3, 2, rng_);
    Check("matmul", [&](Tape& t) { return Project(t, MatMul(t.Param(a), t.Param(b)), w); },
          {&a, &b}, tol);
  }
  {
    Parameter x("x", Random(4, 3, rng_)), y("y", Random(4, 3, rng_)), r("r", Random(1, 3, rng_));
    Matrix w = Random(4, 3, rng_);
    Check("elementwise", [&](Tape& t) {
      Var p = Mul(Sub(t.Param(x), t.Param(y)), Add(t.Param(x), t.Param(y)));
      return Project(t, AddRowBroadcast(AddScalar(Scale(p, 0.7), 0.3), t.Param(r)), w);
    }, {&x, &y, &r}, tol);
  }
  {
    Parameter x("x", Random(4, 5, rng_));
    Matrix w = Random(4, 5, rng_);
    Check("sigmoid", [&](Tape& t) { return Project(t, Sigmoid(t.Param(x)), w); }, {&x}, tol);
    Check("relu", [&](Tape& t) { return Project(t, Relu(t.Param(x)), w); }, {&x}, tol);
    Matrix ws = Random(4, 2, rng_);
    Check("slice_cols", [&](Tape& t) { return Project(t, SliceCols(t.Param(x), 1, 3), ws); },
          {&x}, tol);
    Check("mean", [&](Tape& t) { return Mean(Mul(t.Param(x), t.Param(x))); }, {&x}, tol);
  }
  {
    Parameter z("z", Random(5, 6, rng_, 0.8));
    Matrix w = Random(5, 6, rng_);
    Check("sparsemax", [&](Tape& t) { return Project(t, Sparsemax(t.Param(z)), w); }, {&z}, tol);
  }
  {
    Parameter z("z", Random(3, 4, rng_));
    Check("entropy_sum", [&](Tape& t) {
      return EntropySum(Sigmoid(t.Param(z)), 1e-15);
    }, {&z}, tol);
  }
  {
    Parameter logits("logits", Random(5, 3, rng_));
    const std::vector<int> labels{0, 2, 1, 1, 0};
    Check("softmax_cross_entropy", [&](Tape& t) {
      return SoftmaxCrossEntropy(t.Param(logits), labels);
    }, {&logits}, tol);
    Matrix target = Random(5, 3, rng_);
    Check("mean_squared_error", [&](Tape& t) {
      return MeanSquaredError(t.Param(logits), target);
    }, {&logits}, tol);
  }
  {
    FcLayer fc("fc", 4, 3, rng_);
    fc.bias.value = Random(1, 3, rng_);
    Parameter x("x", Random(5, 4, rng_));
    Matrix w = Random(5, 3, rng_);
    Check("fc", [&](Tape& t) { return Project(t, fc.Forward(t, t.Param(x)), w); },
          {&fc.weight, &fc.bias, &x}, tol);
  }
  {
    // Chunks of 3 and 4 rows: the single trailing row merges into the second.
    BatchNorm bn("bn", 3, 3, 0.9);
    bn.gain.value = Random(1, 3, rng_);
    bn.shift.value = Random(1, 3, rng_);
    Parameter x("x", Random(7, 3, rng_));
    Matrix w = Random(7, 3, rng_);
    Check("ghost_batch_norm", [&](Tape& t) {
      return Project(t, bn.Forward(t, t.Param(x), Mode::kTrain), w);
    }, {&bn.gain, &bn.shift, &x}, tol);
    BatchNorm full("bn_full", 3, 0, 0.9);
    full.gain.value = Random(1, 3, rng_);
    Check("batch_norm", [&](Tape& t) {
      return Project(t, full.Forward(t, t.Param(x), Mode::kTrain), w);
    }, {&full.gain, &full.shift, &x}, tol);
    Check("batch_norm_infer", [&](Tape& t) {
      return Project(t, bn.Forward(t, t.Param(x), Mode::kInfer), w);
    }, {&bn.gain, &bn.shift, &x}, tol);
  }
  for (BlockActivation act : {BlockActivation::kGlu, BlockActivation::kRelu}) {
    GluBlock block("block", 4, 3, 3, 0.9, rng_, act);
    Parameter x("x", Random(6, 4, rng_));
    Matrix w = Random(6, 3, rng_);
    Check(act == BlockActivation::kGlu ? "glu_block" : "relu_block", [&](Tape& t) {
      return Project(t, block.Forward(t, t.Param(x), Mode::kTrain), w);
    }, {&block.fc.weight, &block.fc.bias, &block.bn.gain, &block.bn.shift, &x}, tol);
  }
  {
    ModelConfig cfg;
    cfg.n_d = 2;
    cfg.n_a = 2;
    cfg.virtual_batch_size = 3;
    cfg.n_shared = 1;
    cfg.n_step = 2;
    std::vector<GluBlock> shared = MakeSharedBlocks("shared", 3, 4, cfg, rng_);
    FeatureTransformer ft("ft", 3, 4, cfg.n_shared, cfg.n_step, cfg, rng_);
    Parameter x("x", Random(6, 3, rng_));
    Matrix w = Random(6, 4, rng_);
    std::vector<Parameter*> params{&x};
    for (auto* blocks : {&shared, &ft.blocks})
      for (auto& b : *blocks)
        params.insert(params.end(), {&b.fc.weight, &b.fc.bias, &b.bn.gain, &b.bn.shift});
    Check("feature_transformer", [&](Tape& t) {
      return Project(t, ft.Forward(t, t.Param(x), shared, Mode::kTrain), w);
    }, params, tol);

    AttentiveTransformer at("att", 2, 5, cfg, rng_);
    Parameter a("a", Random(6, 2, rng_));
    Matrix prior(6, 5);
    std::uniform_real_distribution<Real> u(0.5, 1.5);
    for (Real& v : prior.values()) v = u(rng_);
    Matrix wm = Random(6, 5, rng_);
    Check("attentive_transformer", [&](Tape& t) {
      return Project(t, at.Forward(t, t.Param(a), t.Constant(prior), Mode::kTrain), wm);
    }, {&at.fc.weight, &at.fc.bias, &at.bn.gain, &at.bn.shift, &a}, tol);
  }
  {
    FeatureSchema schema = FeatureSchema::Numeric(3, TargetSpec{});
    schema.columns[1].kind = ColumnKind::kCategorical;
    schema.columns[1].cardinality = 4;
    EmbeddingTable emb(schema, rng_);
    Matrix raw = Random(5, 3, rng_);
    const Real codes[] = {0, 3, 1, 3, 2};
    for (std::size_t b = 0; b < 5; ++b) raw(b, 1) = codes[b];
    Matrix w = Random(5, 3, rng_);
    Check("embedding", [&](Tape& t) {
      return Project(t, Sigmoid(emb.Embed(t, t.Constant(raw))), w);
    }, emb.parameters(), tol);
  }
  {
    Parameter f_hat("f_hat", Random(6, 3, rng_));
    Matrix f = Random(6, 3, rng_);
    Rng mask_rng(options_.seed);
    Matrix mask = SampleMask(6, 3, 0.5, mask_rng);
    Check("reconstruction_loss", [&](Tape& t) {
      return ReconstructionLoss(t.Param(f_hat), f, mask);
    }, {&f_hat}, tol);
  }
}

// Two ghost batches of four rows. Two-row batches saturate the normalization
// and leave finite differences dominated by roundoff.
constexpr std::size_t kRows = 8;

ModelConfig TinyConfig() {
  ModelConfig cfg;
  cfg.n_steps = 2;
  cfg.n_d = 3;
  cfg.n_a = 3;
  cfg.gamma = 1.5;
  cfg.lambda_sparse = 0.01;
  cfg.virtual_batch_size = 4;
  cfg.batch_size = 8;
  return cfg;
}

void Suite::Encoder() {
  TargetSpec target;
  target.outputs = 2;
  FeatureSchema schema = FeatureSchema::Numeric(4, target);
  AttentiveModel model(schema, TinyConfig(), options_.seed);
  std::uniform_real_distribution<Real> jitter(0.8, 1.2);
  for (BatchNorm* bn : model.batch_norms())
    for (Real& g : bn->gain.value.values()) g = jitter(rng_);
  Parameter raw("raw", Random(kRows, 4, rng_));
  Matrix labels = Matrix::FromRows({{0}, {1}, {1}, {0}, {1}, {0}, {0}, {1}});
  std::vector<Parameter*> params = model.parameters();
  params.push_back(&raw);
  Check("encoder", [&](Tape& t) {
    EncoderGraph g = model.Forward(t, t.Param(raw), Mode::kTrain);
    return SupervisedLoss(g.predictions, labels, schema.target, model.config().lambda_sparse,
                          g.sparse_loss);
  }, params, options_.model_tolerance);
}

void Suite::Decoder() {
  ModelConfig cfg = TinyConfig();
  FeatureDecoder decoder(cfg, 4, options_.seed);
  Parameter rep0("rep0", Random(kRows, 3, rng_)), rep1("rep1", Random(kRows, 3, rng_));
  Matrix mask = Matrix::FromRows({{1, 0, 1, 0}, {0, 1, 1, 0}, {1, 1, 0, 1}, {0, 0, 1, 1},
                                  {0, 1, 0, 1}, {1, 0, 0, 0}, {0, 0, 1, 0}, {1, 1, 0, 0}});
  Matrix w = Random(kRows, 4, rng_);
  std::vector<Parameter*> params = decoder.parameters();
  params.push_back(&rep0);
  params.push_back(&rep1);
  Check("decoder", [&](Tape& t) {
    std::vector<Var> reps{t.Param(rep0), t.Param(rep1)};
    return Project(t, decoder.Forward(t, reps, mask, Mode::kTrain), w);
  }, params, options_.layer_tolerance);

  AttentiveModel model(FeatureSchema::Numeric(4, TargetSpec{}), cfg, options_.seed + 1);
  Parameter features("features", Random(kRows, 4, rng_));
  const Matrix target = features.value;
  std::vector<Parameter*> all = model.encoder_parameters();
  for (Parameter* p : decoder.parameters()) all.push_back(p);
  all.push_back(&features);
  Check("pretrain_pass", [&](Tape& t) {
    Var f = t.Param(features);
    Matrix keep(kRows, 4);
    for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = 1.0 - mask[k];
    EncoderGraph g = model.Encode(t, Mul(f, t.Constant(keep)), keep, Mode::kTrain);
    Var rec = decoder.Forward(t, g.decisions, mask, Mode::kTrain);
    return ReconstructionLoss(rec, target, mask);
  }, all, options_.model_tolerance);
}

void Suite::Fault() {
  Parameter x("x", Random(3, 3, rng_));
  Matrix w = Random(3, 3, rng_);
  Check("injected_sign_flip", [&](Tape& t) {
    Var in = t.Param(x);
    const std::size_t id = in.id();
    Matrix doubled = in.value();
    for (Real& v : doubled.values()) v *= 2.0;
    Var out = t.Record("faulty_scale", doubled, {in}, [id](Tape& tape, std::size_t self) {
      Matrix g = tape.grad(self);
      for (Real& v : g.values()) v *= -2.0;
      tape.AccumulateGrad(id, g);
    });
    return Project(t, out, w);
  }, {&x}, options_.layer_tolerance);
}

}  // namespace

GradScope ParseGradScope(const std::string& name) {
  if (name == "layers") return GradScope::kLayers;
  if (name == "encoder") return GradScope::kEncoder;
  if (name == "decoder") return GradScope::kDecoder;
  if (name == "all") return GradScope::kAll;
  throw std::invalid_argument("unknown gradient-check scope '" + name +
                              "' (expected layers, encoder, decoder or all)");
}

std::vector<GradReport> RunGradientSuite(GradScope scope, const GradSuiteOptions& options) {
  Suite suite(options);
  if (scope == GradScope::kLayers || scope == GradScope::kAll) suite.Layers();
  if (scope == GradScope::kEncoder || scope == GradScope::kAll) suite.Encoder();
  if (scope == GradScope::kDecoder || scope == GradScope::kAll) suite.Decoder();
  if (options.inject_sign_flip) suite.Fault();
  return std::move(suite).reports();
}

}  // namespace tabsel
