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

#ifndef TABSEL_SYNTHETIC_H_
#define TABSEL_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "tabsel/dataset.h"
#include "tabsel/matrix.h"

namespace tabsel {

// Binary-classification generators with known salient features. Inputs are
// 11 i.i.d. standard normals X1..X11; P(y = 1) = 1 / (1 + odds(X)).
//   syn1: odds = exp(X1 X2)
//   syn2: odds = exp(X3^2 + X4^2 + X5^2 + X6^2 - 4)
//   syn3: odds = exp(-10 sin(0.2 X7) + |X8| + X9 + exp(-X10) - 2.4)
//   syn4: syn1 if X11 < 0, else syn2
//   syn5: syn1 if X11 < 0, else syn3
//   syn6: syn2 if X11 < 0, else syn3
enum class SynKind { kSyn1 = 1, kSyn2, kSyn3, kSyn4, kSyn5, kSyn6 };

inline constexpr std::size_t kSynFeatures = 11;

// "syn1".."syn6"; throws std::invalid_argument otherwise.
SynKind ParseSynKind(const std::string& name);
std::string SynKindName(SynKind kind);

// odds(X) for one row of 11 features.
Real SynOdds(SynKind kind, std::span<const Real> x);

// Schema with numeric columns x1..x11 and a binary target "label".
FeatureSchema SynSchema();

Dataset GenerateSynthetic(SynKind kind, std::size_t n, std::uint64_t seed);

}  // namespace tabsel

#endif  // TABSEL_SYNTHETIC_H_
