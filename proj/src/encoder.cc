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

#include "tabsel/encoder.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tabsel/ops.h"

namespace tabsel {

using nlohmann::json;

namespace {

constexpr std::uint64_t kHeadSeedSalt = 0x9e3779b97f4a7c15ULL;

template <typename T>
bool InSet(T v, std::initializer_list<T> allowed) {
  for (T a : allowed)
    if (a == v) return true;
  return false;
}

}  // namespace

std::vector<std::string> ModelConfig::Problems() const {
  std::vector<std::string> p;
  if (n_steps < 1) p.push_back("n_steps must be >= 1");
  if (n_d < 1) p.push_back("n_d must be >= 1");
  if (n_a < 1) p.push_back("n_a must be >= 1");
  if (!(gamma >= 1.0)) p.push_back("gamma must be >= 1");
  if (!(lambda_sparse >= 0.0)) p.push_back("lambda_sparse must be >= 0");
  if (!(entropy_epsilon > 0.0)) p.push_back("entropy_epsilon must be > 0");
  if (n_shared + n_step < 1)
    p.push_back("feature transformer needs at least one block");
  if (batch_size < 2) p.push_back("batch_size must be >= 2");
  if (!(momentum > 0.0 && momentum <= 1.0))
    p.push_back("momentum must lie in (0, 1]");
  if (!(mask_probability > 0.0 && mask_probability < 1.0))
    p.push_back("mask_probability must lie in (0, 1)");
  return p;
}

void ModelConfig::Validate() const {
  const auto p = Problems();
  if (p.empty()) return;
  std::ostringstream msg;
  msg << "invalid model config:";
  for (const auto& s : p) msg << "\n  - " << s;
  throw std::invalid_argument(msg.str());
}

std::vector<std::string> ModelConfig::SearchSpaceViolations() const {
  std::vector<std::string> v;
  const std::initializer_list<std::size_t> widths{8, 16, 24, 32, 64, 128};
  if (!InSet(n_d, widths)) v.push_back("n_d=" + std::to_string(n_d));
  if (!InSet(n_a, widths)) v.push_back("n_a=" + std::to_string(n_a));
  if (n_steps < 3 || n_steps > 10) v.push_back("n_steps=" + std::to_string(n_steps));
  if (!InSet(gamma, {1.0, 1.2, 1.5, 2.0})) v.push_back("gamma=" + std::to_string(gamma));
  if (!InSet(lambda_sparse, {0.0, 0.000001, 0.0001, 0.001, 0.01, 0.1}))
    v.push_back("lambda_sparse=" + std::to_string(lambda_sparse));
  if (!InSet<std::size_t>(batch_size, {256, 512, 1024, 2048, 4096, 8192, 16384, 32768}))
    v.push_back("batch_size=" + std::to_string(batch_size));
  if (!InSet<std::size_t>(virtual_batch_size, {256, 512, 1024, 2048, 4096}))
    v.push_back("virtual_batch_size=" + std::to_string(virtual_batch_size));
  if (!InSet(momentum, {0.6, 0.7, 0.8, 0.9, 0.95, 0.98}))
    v.push_back("momentum=" + std::to_string(momentum));
  return v;
}

json ModelConfig::ToJson() const {
  return {{"n_steps", n_steps},
          {"n_d", n_d},
          {"n_a", n_a},
          {"gamma", gamma},
          {"lambda_sparse", lambda_sparse},
          {"entropy_epsilon", entropy_epsilon},
          {"n_shared", n_shared},
          {"n_step", n_step},
          {"activation", activation == BlockActivation::kGlu ? "glu" : "relu"},
          {"batch_size", batch_size},
          {"virtual_batch_size", virtual_batch_size},
          {"momentum", momentum},
          {"decoder_steps", decoder_steps},
          {"mask_probability", mask_probability}};
}

ModelConfig ModelConfig::FromJson(const json& j) {
  ModelConfig c;
  c.n_steps = j.value("n_steps", c.n_steps);
  c.n_d = j.value("n_d", c.n_d);
  c.n_a = j.value("n_a", c.n_a);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda_sparse = j.value("lambda_sparse", c.lambda_sparse);
  c.entropy_epsilon = j.value("entropy_epsilon", c.entropy_epsilon);
  c.n_shared = j.value("n_shared", c.n_shared);
  c.n_step = j.value("n_step", c.n_step);
  const std::string act = j.value("activation", "glu");
  if (act == "glu") {
    c.activation = BlockActivation::kGlu;
  } else if (act == "relu") {
    c.activation = BlockActivation::kRelu;
  } else {
    throw std::invalid_argument("unknown activation '" + act + "'");
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  c.virtual_batch_size = j.value("virtual_batch_size", c.virtual_batch_size);
  c.momentum = j.value("momentum", c.momentum);
  c.decoder_steps = j.value("decoder_steps", c.decoder_steps);
  c.mask_probability = j.value("mask_probability", c.mask_probability);
  return c;
}

std::vector<GluBlock> MakeSharedBlocks(const std::string& name, std::size_t in,
                                       std::size_t hidden,
                                       const ModelConfig& cfg, Rng& rng) {
  std::vector<GluBlock> blocks;
  for (std::size_t k = 0; k < cfg.n_shared; ++k) {
    blocks.emplace_back(name + ".shared" + std::to_string(k), k == 0 ? in : hidden,
                        hidden, cfg.virtual_batch_size, cfg.momentum, rng,
                        cfg.activation);
  }
  return blocks;
}

FeatureTransformer::FeatureTransformer(const std::string& name, std::size_t in,
                                       std::size_t hidden,
                                       std::size_t shared_count,
                                       std::size_t own_count,
                                       const ModelConfig& cfg, Rng& rng) {
  const std::size_t bn_width = cfg.activation == BlockActivation::kGlu ? 2 * hidden : hidden;
  for (std::size_t k = 0; k < shared_count; ++k) {
    const std::string site = name + ".shared" + std::to_string(k) + ".bn";
    shared_stats.push_back(BnStats{site, Matrix(1, bn_width), Matrix(1, bn_width, 1.0), false});
  }
  for (std::size_t k = 0; k < own_count; ++k) {
    const bool first_in_chain = shared_count == 0 && k == 0;
    blocks.emplace_back(name + ".block" + std::to_string(k),
                        first_in_chain ? in : hidden, hidden,
                        cfg.virtual_batch_size, cfg.momentum, rng,
                        cfg.activation);
  }
}

Var FeatureTransformer::Forward(Tape& tape, Var x, std::span<GluBlock> shared,
                                Mode mode) {
  static const Real kResidualScale = std::sqrt(0.5);
  if (shared.size() != shared_stats.size()) {
    throw std::invalid_argument("feature transformer built for " +
                                std::to_string(shared_stats.size()) + " shared blocks, given " +
                                std::to_string(shared.size()));
  }
  bool first = true;
  auto apply = [&](GluBlock& block, BnStats& site) {
    if (first) {
      x = block.Forward(tape, x, mode, site);
      first = false;
    } else {
      x = Scale(Add(x, block.Forward(tape, x, mode, site)), kResidualScale);
    }
  };
  for (std::size_t k = 0; k < shared.size(); ++k) apply(shared[k], shared_stats[k]);
  for (GluBlock& b : blocks) apply(b, b.bn.stats);
  return x;
}

AttentiveTransformer::AttentiveTransformer(const std::string& name,
                                           std::size_t n_a,
                                           std::size_t num_features,
                                           const ModelConfig& cfg, Rng& rng)
    : fc(name + ".fc", n_a, num_features, rng),
      bn(name + ".bn", num_features, cfg.virtual_batch_size, cfg.momentum) {}

Var AttentiveTransformer::Forward(Tape& tape, Var a_prev, Var prior, Mode mode) {
  Var logits = bn.Forward(tape, fc.Forward(tape, a_prev), mode);
  RequireSameShape(logits.value(), prior.value(), "attentive transformer prior");
  // Zero-prior features are excluded outright, so a spent or hidden feature
  // cannot regain weight through a low sparsemax threshold.
  return Sparsemax(Mul(prior, logits), &prior.value());
}

Var UpdatePrior(Var prior, Var mask, Real gamma) {
  return Mul(prior, AddScalar(Scale(mask, -1.0), gamma));
}

MaskTrace EncoderGraph::Trace() const {
  MaskTrace t;
  for (const Var& m : masks) t.masks.push_back(m.value());
  for (const Var& p : priors) t.priors.push_back(p.value());
  for (const Var& d : decisions) t.decisions.push_back(d.value());
  return t;
}

Var AggregateDecisions(std::span<const Var> decisions) {
  if (decisions.empty()) throw std::invalid_argument("no decision steps");
  Var total = Relu(decisions[0]);
  for (std::size_t i = 1; i < decisions.size(); ++i)
    total = Add(total, Relu(decisions[i]));
  return total;
}

Var SparsityLoss(std::span<const Var> masks, Real eps) {
  if (masks.empty()) throw std::invalid_argument("no masks");
  Var total = EntropySum(masks[0], eps);
  for (std::size_t i = 1; i < masks.size(); ++i)
    total = Add(total, EntropySum(masks[i], eps));
  const Real denom = static_cast<Real>(masks.size() * masks[0].rows());
  return Scale(total, 1.0 / denom);
}

Real SparsityLoss(std::span<const Matrix> masks, Real eps) {
  if (masks.empty()) throw std::invalid_argument("no masks");
  Real total = 0.0;
  for (const Matrix& m : masks)
    for (Real v : m.values()) total -= v * std::log(v + eps);
  return total / static_cast<Real>(masks.size() * masks[0].rows());
}

Var SupervisedLoss(Var predictions, const Matrix& targets,
                   const TargetSpec& target, Real lambda_sparse,
                   Var sparse_loss) {
  Var task_loss;
  if (target.task == TaskKind::kClassification) {
    if (targets.cols() != 1 || targets.rows() != predictions.rows()) {
      throw ShapeError("classification targets must be " +
                       std::to_string(predictions.rows()) + "x1, got " +
                       targets.ShapeString());
    }
    std::vector<int> labels(targets.rows());
    for (std::size_t b = 0; b < labels.size(); ++b) {
      const Real y = targets[b];
      if (y < 0.0 || std::floor(y) != y ||
          y >= static_cast<Real>(predictions.cols())) {
        throw std::out_of_range("label " + std::to_string(y) + " at row " +
                                std::to_string(b) + " outside [0, " +
                                std::to_string(predictions.cols()) + ")");
      }
      labels[b] = static_cast<int>(y);
    }
    task_loss = SoftmaxCrossEntropy(predictions, labels);
  } else {
    task_loss = MeanSquaredError(predictions, targets);
  }
  if (lambda_sparse == 0.0) return task_loss;
  return Add(task_loss, Scale(sparse_loss, lambda_sparse));
}

AttentiveModel::AttentiveModel(FeatureSchema schema, ModelConfig config,
                         std::uint64_t seed)
    : schema_(std::move(schema)), config_(config) {
  schema_.Validate();
  config_.Validate();
  const std::size_t d = schema_.num_features();
  const std::size_t hidden = config_.hidden();
  Rng rng(seed);
  embeddings = EmbeddingTable(schema_, rng);
  input_bn = BatchNorm("encoder.input_bn", d, /*virtual_batch_size=*/0,
                       config_.momentum);
  shared = MakeSharedBlocks("encoder", d, hidden, config_, rng);
  for (std::size_t i = 0; i <= config_.n_steps; ++i) {
    transformers.emplace_back("encoder.step" + std::to_string(i), d, hidden,
                              config_.n_shared, config_.n_step, config_, rng);
  }
  for (std::size_t i = 1; i <= config_.n_steps; ++i) {
    attentive.emplace_back("encoder.attentive" + std::to_string(i), config_.n_a,
                           d, config_, rng);
  }
  head = FcLayer("head", config_.n_d, schema_.output_width(), rng);
}

void AttentiveModel::ResetHead(std::uint64_t seed) {
  Rng rng(seed ^ kHeadSeedSalt);
  head = FcLayer("head", config_.n_d, schema_.output_width(), rng);
}

Var AttentiveModel::Embed(Tape& tape, Var raw) {
  return embeddings.Embed(tape, raw);
}

EncoderGraph AttentiveModel::Encode(Tape& tape, Var features,
                                 const Matrix& prior0, Mode mode) {
  const Matrix& fv = features.value();
  if (fv.cols() != schema_.num_features()) {
    throw ShapeError("encoder expects " + std::to_string(schema_.num_features()) +
                     " features, got " + fv.ShapeString());
  }
  RequireSameShape(fv, prior0, "initial prior");
  const std::size_t n_d = config_.n_d;
  const std::size_t hidden = config_.hidden();

  EncoderGraph g;
  Var x = input_bn.Forward(tape, features, mode);
  Var prior = tape.Constant(prior0);
  // The bootstrap step sees only features with a nonzero initial prior.
  Var a = SliceCols(transformers[0].Forward(tape, Mul(prior, x), shared, mode),
                    n_d, hidden);
  for (std::size_t i = 1; i <= config_.n_steps; ++i) {
    Var mask = attentive[i - 1].Forward(tape, a, prior, mode);
    prior = UpdatePrior(prior, mask, config_.gamma);
    Var h = transformers[i].Forward(tape, Mul(mask, x), shared, mode);
    g.masks.push_back(mask);
    g.priors.push_back(prior);
    g.decisions.push_back(SliceCols(h, 0, n_d));
    a = SliceCols(h, n_d, hidden);
  }
  g.d_out = AggregateDecisions(g.decisions);
  g.predictions = head.Forward(tape, g.d_out);
  g.sparse_loss = SparsityLoss(g.masks, config_.entropy_epsilon);
  return g;
}

EncoderGraph AttentiveModel::Forward(Tape& tape, Var raw, Mode mode) {
  Var f = Embed(tape, raw);
  return Encode(tape, f, Matrix(f.rows(), f.cols(), 1.0), mode);
}

EncoderOutput AttentiveModel::Run(const Matrix& raw, Mode mode,
                               const Matrix* prior0) {
  Tape tape;
  Var f = Embed(tape, tape.Constant(raw));
  EncoderGraph g = Encode(
      tape, f, prior0 != nullptr ? *prior0 : Matrix(raw.rows(), raw.cols(), 1.0),
      mode);
  EncoderOutput out;
  out.predictions = g.predictions.value();
  out.d_out = g.d_out.value();
  out.trace = g.Trace();
  out.sparse_loss = g.sparse_loss.value()[0];
  return out;
}

std::vector<Parameter*> AttentiveModel::encoder_parameters() {
  std::vector<Parameter*> out = embeddings.parameters();
  auto add_bn = [&out](BatchNorm& bn) {
    out.push_back(&bn.gain);
    out.push_back(&bn.shift);
  };
  auto add_block = [&](GluBlock& b) {
    out.push_back(&b.fc.weight);
    out.push_back(&b.fc.bias);
    add_bn(b.bn);
  };
  add_bn(input_bn);
  for (auto& b : shared) add_block(b);
  for (auto& t : transformers)
    for (auto& b : t.blocks) add_block(b);
  for (auto& at : attentive) {
    out.push_back(&at.fc.weight);
    out.push_back(&at.fc.bias);
    add_bn(at.bn);
  }
  return out;
}

std::vector<Parameter*> AttentiveModel::parameters() {
  std::vector<Parameter*> out = encoder_parameters();
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

std::vector<BatchNorm*> AttentiveModel::batch_norms() {
  std::vector<BatchNorm*> out{&input_bn};
  for (auto& b : shared) out.push_back(&b.bn);
  for (auto& t : transformers)
    for (auto& b : t.blocks) out.push_back(&b.bn);
  for (auto& at : attentive) out.push_back(&at.bn);
  return out;
}

std::vector<BnStats*> AttentiveModel::running_stats() {
  std::vector<BnStats*> out{&input_bn.stats};
  for (auto& t : transformers) {
    for (auto& s : t.shared_stats) out.push_back(&s);
    for (auto& b : t.blocks) out.push_back(&b.bn.stats);
  }
  for (auto& at : attentive) out.push_back(&at.bn.stats);
  return out;
}

std::size_t AttentiveModel::NumTrainableParameters() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += p->size();
  return n;
}

}  // namespace tabsel
