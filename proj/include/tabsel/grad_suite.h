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

#ifndef TABSEL_GRAD_SUITE_H_
#define TABSEL_GRAD_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tabsel/grad_check.h"

namespace tabsel {

enum class GradScope { kLayers, kEncoder, kDecoder, kAll };

// "layers", "encoder", "decoder" or "all".
GradScope ParseGradScope(const std::string& name);

struct GradSuiteOptions {
  std::uint64_t seed = 7;
  // Adds a fixture op whose backward pass has the wrong sign.
  bool inject_sign_flip = false;
  // Single layers and small chains.
  Real layer_tolerance = 1e-4;
  // Whole encoder or pretraining pass.
  Real model_tolerance = 1e-3;
};

// Finite-difference checks at 64-bit for the chosen scope, one report per op.
std::vector<GradReport> RunGradientSuite(GradScope scope,
                                         const GradSuiteOptions& options = {});

}  // namespace tabsel

#endif  // TABSEL_GRAD_SUITE_H_
