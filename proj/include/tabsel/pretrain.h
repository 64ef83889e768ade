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

#ifndef TABSEL_PRETRAIN_H_
#define TABSEL_PRETRAIN_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tabsel/dataset.h"
#include "tabsel/decoder.h"
#include "tabsel/encoder.h"
#include "tabsel/optimizer.h"

namespace tabsel {

// Binary B x D mask with i.i.d. Bernoulli(p) entries; 1 marks a cell hidden
// from the encoder and reconstructed by the decoder. Requires 0 < p < 1.
Matrix SampleMask(std::size_t rows, std::size_t cols, Real p, Rng& rng);

// sum_b sum_j ((f_hat - f) * S / colnorm_j)^2 with
// colnorm_j = sqrt(sum_b (f_bj - mean_j)^2) over the batch; columns without
// spread use colnorm 1. Requires at least two rows.
Real ReconstructionLoss(const Matrix& f_hat, const Matrix& f, const Matrix& mask);
Var ReconstructionLoss(Var f_hat, const Matrix& f, const Matrix& mask);

// Per-column normalizers used by ReconstructionLoss.
std::vector<Real> ColumnNorms(const Matrix& f);

// One masked reconstruction pass. The encoder sees (1 - S) * f with initial
// prior 1 - S; the decoder reads the per-step decision outputs. The target f
// is the embedded input, held constant.
struct PretrainGraph {
  Var loss;
  Var reconstruction;
  EncoderGraph encoder;
};
PretrainGraph PretrainForward(Tape& tape, AttentiveModel& model,
                              FeatureDecoder& decoder, const Matrix& raw,
                              const Matrix& mask, Mode mode);

struct PretrainOptions {
  LrSchedule schedule;
  std::size_t max_iterations = 1000;
  std::uint64_t seed = 0;  // batch order and mask sampling
};

struct PretrainResult {
  // (iteration, batch loss) for every optimizer step.
  std::vector<std::pair<std::size_t, Real>> loss_curve;
};

// Self-supervised training of the encoder (not the output head) and decoder.
PretrainResult Pretrain(AttentiveModel& model, FeatureDecoder& decoder,
                        const Dataset& data, const PretrainOptions& options);

// "step,loss" rows with a header.
void WriteLossCurve(const std::string& path,
                    const std::vector<std::pair<std::size_t, Real>>& curve);

// Architecture fields that must match between a pretrained encoder and its
// fine-tuning configuration; one line per difference.
std::vector<std::string> TransferIncompatibilities(const AttentiveModel& pretrained,
                                                   const FeatureSchema& schema,
                                                   const ModelConfig& config);

// New model for `config` whose encoder parameters and batch-norm statistics
// are copied from `pretrained` and whose output head is freshly initialized
// from `seed`. Batch-norm virtual batch size and momentum follow `config`.
// Throws std::invalid_argument with the full difference report.
AttentiveModel TransferEncoder(const AttentiveModel& pretrained,
                            const ModelConfig& config, std::uint64_t seed);

}  // namespace tabsel

#endif  // TABSEL_PRETRAIN_H_
