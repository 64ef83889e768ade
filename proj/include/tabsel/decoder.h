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

#ifndef TABSEL_DECODER_H_
#define TABSEL_DECODER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tabsel/encoder.h"
#include "tabsel/layers.h"
#include "tabsel/matrix.h"
#include "tabsel/tape.h"

namespace tabsel {

// Reconstructs features from per-step encoder representations. Each step
// owns a feature transformer (n_d -> n_d) and an FC layer (n_d -> D); step
// outputs are summed and multiplied by the mask S.
class FeatureDecoder {
 public:
  FeatureDecoder() = default;
  FeatureDecoder(const ModelConfig& config, std::size_t num_features,
                std::uint64_t seed);

  // sum_i fc_i(transform_i(step_reps[i])) * S. The number of representations
  // must equal the step count, unless decoder_steps was set explicitly, in
  // which case representations are reused cyclically.
  Var Forward(Tape& tape, std::span<const Var> step_reps, const Matrix& mask,
              Mode mode);

  std::size_t steps() const { return transformers.size(); }
  std::size_t num_features() const { return num_features_; }
  const ModelConfig& config() const { return config_; }

  std::vector<Parameter*> parameters();
  std::vector<BatchNorm*> batch_norms();
  std::vector<BnStats*> running_stats();

  std::vector<GluBlock> shared;
  std::vector<FeatureTransformer> transformers;
  std::vector<FcLayer> outputs;

 private:
  ModelConfig config_;
  std::size_t num_features_ = 0;
};

}  // namespace tabsel

#endif  // TABSEL_DECODER_H_
