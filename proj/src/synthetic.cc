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

#include "tabsel/synthetic.h"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tabsel {

namespace {

Real XorOdds(std::span<const Real> x) { return std::exp(x[0] * x[1]); }

Real OrangeOdds(std::span<const Real> x) {
  return std::exp(x[2] * x[2] + x[3] * x[3] + x[4] * x[4] + x[5] * x[5] - 4.0);
}

Real AdditiveOdds(std::span<const Real> x) {
  return std::exp(-10.0 * std::sin(0.2 * x[6]) + std::abs(x[7]) + x[8] +
                  std::exp(-x[9]) - 2.4);
}

}  // namespace

SynKind ParseSynKind(const std::string& name) {
  for (int k = 1; k <= 6; ++k)
    if (name == "syn" + std::to_string(k)) return static_cast<SynKind>(k);
  throw std::invalid_argument("unknown synthetic kind '" + name +
                              "' (expected syn1..syn6)");
}

std::string SynKindName(SynKind kind) {
  return "syn" + std::to_string(static_cast<int>(kind));
}

Real SynOdds(SynKind kind, std::span<const Real> x) {
  if (x.size() != kSynFeatures) {
    throw ShapeError("synthetic rows have " + std::to_string(kSynFeatures) +
                     " features, got " + std::to_string(x.size()));
  }
  const bool low = x[10] < 0.0;
  switch (kind) {
    case SynKind::kSyn1: return XorOdds(x);
    case SynKind::kSyn2: return OrangeOdds(x);
    case SynKind::kSyn3: return AdditiveOdds(x);
    case SynKind::kSyn4: return low ? XorOdds(x) : OrangeOdds(x);
    case SynKind::kSyn5: return low ? XorOdds(x) : AdditiveOdds(x);
    case SynKind::kSyn6: return low ? OrangeOdds(x) : AdditiveOdds(x);
  }
  throw std::invalid_argument("bad synthetic kind");
}

FeatureSchema SynSchema() {
  TargetSpec target;
  target.name = "label";
  target.task = TaskKind::kClassification;
  target.outputs = 2;
  target.vocabulary = {"0", "1"};
  return FeatureSchema::Numeric(kSynFeatures, target);
}

Dataset GenerateSynthetic(SynKind kind, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("synthetic dataset needs n > 0");
  Dataset data;
  data.schema = SynSchema();
  data.features = Matrix(n, kSynFeatures);
  data.targets = Matrix(n, 1);
  Rng rng(seed);
  std::normal_distribution<Real> normal(0.0, 1.0);
  std::uniform_real_distribution<Real> uniform(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = data.features.row(i);
    for (Real& v : row) v = normal(rng);
    const Real p1 = 1.0 / (1.0 + SynOdds(kind, row));
    data.targets(i, 0) = uniform(rng) < p1 ? 1.0 : 0.0;
  }
  return data;
}

}  // namespace tabsel
