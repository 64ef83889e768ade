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

#include "tabsel/decoder.h"

#include <stdexcept>
#include <string>

#include "tabsel/ops.h"

namespace tabsel {

FeatureDecoder::FeatureDecoder(const ModelConfig& config,
                             std::size_t num_features, std::uint64_t seed)
    : config_(config), num_features_(num_features) {
  config_.Validate();
  if (num_features == 0) throw std::invalid_argument("decoder needs at least one feature");
  Rng rng(seed);
  const std::size_t width = config_.n_d;
  shared = MakeSharedBlocks("decoder", width, width, config_, rng);
  for (std::size_t i = 0; i < config_.effective_decoder_steps(); ++i) {
    const std::string name = "decoder.step" + std::to_string(i);
    transformers.emplace_back(name, width, width, config_.n_shared,
                              config_.n_step, config_, rng);
    outputs.emplace_back(name + ".fc", width, num_features, rng);
  }
}

Var FeatureDecoder::Forward(Tape& tape, std::span<const Var> step_reps,
                           const Matrix& mask, Mode mode) {
  if (step_reps.empty()) throw std::invalid_argument("decoder: no step representations");
  if (step_reps.size() != steps() && config_.decoder_steps == 0) {
    throw std::invalid_argument("decoder: " + std::to_string(step_reps.size()) +
                                " step representations for " +
                                std::to_string(steps()) + " decoder steps");
  }
  const std::size_t rows = step_reps[0].rows();
  if (mask.rows() != rows || mask.cols() != num_features_) {
    throw ShapeError("decoder: mask is " + mask.ShapeString() + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(num_features_));
  }
  Var total;
  for (std::size_t i = 0; i < steps(); ++i) {
    const Var& rep = step_reps[i % step_reps.size()];
    Var out = outputs[i].Forward(tape, transformers[i].Forward(tape, rep, shared, mode));
    total = total.valid() ? Add(total, out) : out;
  }
  return Mul(total, tape.Constant(mask));
}

std::vector<Parameter*> FeatureDecoder::parameters() {
  std::vector<Parameter*> out;
  auto add_block = [&out](GluBlock& b) {
    out.insert(out.end(), {&b.fc.weight, &b.fc.bias, &b.bn.gain, &b.bn.shift});
  };
  for (auto& b : shared) add_block(b);
  for (std::size_t i = 0; i < steps(); ++i) {
    for (auto& b : transformers[i].blocks) add_block(b);
    out.push_back(&outputs[i].weight);
    out.push_back(&outputs[i].bias);
  }
  return out;
}

std::vector<BatchNorm*> FeatureDecoder::batch_norms() {
  std::vector<BatchNorm*> out;
  for (auto& b : shared) out.push_back(&b.bn);
  for (auto& t : transformers)
    for (auto& b : t.blocks) out.push_back(&b.bn);
  return out;
}

std::vector<BnStats*> FeatureDecoder::running_stats() {
  std::vector<BnStats*> out;
  for (auto& t : transformers) {
    for (auto& s : t.shared_stats) out.push_back(&s);
    for (auto& b : t.blocks) out.push_back(&b.bn.stats);
  }
  return out;
}

}  // namespace tabsel
