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

#ifndef TABSEL_ENCODER_H_
#define TABSEL_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabsel/layers.h"
#include "tabsel/matrix.h"
#include "tabsel/schema.h"
#include "tabsel/tape.h"

namespace tabsel {

// Architecture hyperparameters of the sequential-attention encoder and its
// pretraining decoder.
struct ModelConfig {
  std::size_t n_steps = 3;
  std::size_t n_d = 8;  // decision width
  std::size_t n_a = 8;  // attention width
  Real gamma = 1.3;     // prior relaxation, >= 1
  Real lambda_sparse = 1e-3;
  Real entropy_epsilon = 1e-15;
  std::size_t n_shared = 2;  // GLU blocks shared by every step
  std::size_t n_step = 2;    // GLU blocks owned by each step
  BlockActivation activation = BlockActivation::kGlu;
  std::size_t batch_size = 1024;
  std::size_t virtual_batch_size = 128;
  Real momentum = 0.9;  // running-statistics momentum m_B
  // Pretraining: decoder steps (0 means n_steps) and cell-mask probability.
  std::size_t decoder_steps = 0;
  Real mask_probability = 0.5;

  std::size_t hidden() const { return n_d + n_a; }
  std::size_t effective_decoder_steps() const {
    return decoder_steps == 0 ? n_steps : decoder_steps;
  }

  // Every violated invariant, empty when valid.
  std::vector<std::string> Problems() const;
  // Throws std::invalid_argument listing all problems at once.
  void Validate() const;
  // Fields outside the hyperparameter search space used for tuning.
  std::vector<std::string> SearchSpaceViolations() const;

  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

// Chain of blocks: shared blocks first, then the step's own blocks. The first
// block maps the input width to n_d + n_a; each later block is residual,
// x <- (x + block(x)) * sqrt(0.5).
class FeatureTransformer {
 public:
  FeatureTransformer() = default;
  FeatureTransformer(const std::string& name, std::size_t in,
                     std::size_t hidden, std::size_t shared_count,
                     std::size_t own_count, const ModelConfig& cfg, Rng& rng);

  Var Forward(Tape& tape, Var x, std::span<GluBlock> shared, Mode mode);

  std::vector<GluBlock> blocks;  // step-dependent blocks
  // This step's running statistics for each shared block.
  std::vector<BnStats> shared_stats;
};

// Builds the shared blocks for transformers with input width `in`.
std::vector<GluBlock> MakeSharedBlocks(const std::string& name, std::size_t in,
                                       std::size_t hidden,
                                       const ModelConfig& cfg, Rng& rng);

// h(a) = BN(FC(a)), producing one mask logit per feature.
class AttentiveTransformer {
 public:
  AttentiveTransformer() = default;
  AttentiveTransformer(const std::string& name, std::size_t n_a,
                       std::size_t num_features, const ModelConfig& cfg,
                       Rng& rng);

  // M = sparsemax(prior * h(a_prev)), restricted to features whose prior is
  // nonzero.
  Var Forward(Tape& tape, Var a_prev, Var prior, Mode mode);

  FcLayer fc;
  BatchNorm bn;
};

// prior * (gamma - mask), elementwise.
Var UpdatePrior(Var prior, Var mask, Real gamma);

// Per-step records of one forward pass.
struct MaskTrace {
  std::vector<Matrix> masks;      // M[i], B x D
  std::vector<Matrix> priors;     // P[i] after step i, B x D
  std::vector<Matrix> decisions;  // d[i], B x n_d
};

struct EncoderOutput {
  Matrix predictions;  // logits (classification) or values (regression)
  Matrix d_out;
  MaskTrace trace;
  Real sparse_loss = 0.0;
};

// Tape handles of one encoder pass.
struct EncoderGraph {
  Var predictions;
  Var d_out;
  Var sparse_loss;
  std::vector<Var> masks;
  std::vector<Var> priors;
  std::vector<Var> decisions;

  MaskTrace Trace() const;
};

// d_out = sum_i ReLU(d[i]).
Var AggregateDecisions(std::span<const Var> decisions);

// Entropy regularizer: sum over steps, rows and features of
// -M log(M + eps), divided by (steps * rows).
Var SparsityLoss(std::span<const Var> masks, Real eps);
Real SparsityLoss(std::span<const Matrix> masks, Real eps);

// Softmax cross entropy (classification) or MSE (regression), plus
// lambda_sparse * sparse_loss.
Var SupervisedLoss(Var predictions, const Matrix& targets,
                   const TargetSpec& target, Real lambda_sparse,
                   Var sparse_loss);

// All trainable parameters and batch-norm statistics of the encoder and its
// output head.
class AttentiveModel {
 public:
  AttentiveModel() = default;
  AttentiveModel(FeatureSchema schema, ModelConfig config, std::uint64_t seed);

  // Raw rows -> embedded features f (B x D).
  Var Embed(Tape& tape, Var raw);
  // Runs the encoder on embedded features with initial prior `prior0`.
  EncoderGraph Encode(Tape& tape, Var features, const Matrix& prior0,
                      Mode mode);
  // Embed + Encode with an all-ones prior.
  EncoderGraph Forward(Tape& tape, Var raw, Mode mode);

  // Tape-free pass; `prior0` defaults to all ones.
  EncoderOutput Run(const Matrix& raw, Mode mode,
                    const Matrix* prior0 = nullptr);

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> encoder_parameters();
  std::vector<BatchNorm*> batch_norms();
  // Every normalization site's statistics, including the per-step ones of
  // shared blocks.
  std::vector<BnStats*> running_stats();
  std::size_t NumTrainableParameters();

  // Replaces the output head with a freshly initialized one.
  void ResetHead(std::uint64_t seed);

  const FeatureSchema& schema() const { return schema_; }
  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }

  EmbeddingTable embeddings;
  BatchNorm input_bn;  // full-batch normalization of the inputs
  std::vector<GluBlock> shared;
  // transformers[0] bootstraps a[0]; transformers[i] serves step i.
  std::vector<FeatureTransformer> transformers;
  std::vector<AttentiveTransformer> attentive;
  FcLayer head;

 private:
  FeatureSchema schema_;
  ModelConfig config_;
};

}  // namespace tabsel

#endif  // TABSEL_ENCODER_H_
