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

#ifndef TABSEL_OPTIMIZER_H_
#define TABSEL_OPTIMIZER_H_

#include <cstddef>
#include <vector>

#include "tabsel/matrix.h"
#include "tabsel/tape.h"

namespace tabsel {

struct AdamOptions {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameters. Reads each
// parameter's accumulated gradient.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::vector<Parameter*> params, AdamOptions options = {});

  // One update with learning rate `lr`. A non-finite gradient aborts before
  // any parameter changes; the error names the parameter.
  void Step(Real lr);
  void ZeroGrad();

  std::size_t step_count() const { return step_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamOptions options_;
  std::size_t step_ = 0;
};

// Staircase exponential decay: base * decay^floor(t / interval).
struct LrSchedule {
  Real base = 0.02;
  Real decay = 0.95;
  std::size_t interval = 500;

  Real At(std::size_t iteration) const;
};

// Rescales all gradients so their global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
Real ClipGradNorm(const std::vector<Parameter*>& params, Real max_norm);

}  // namespace tabsel

#endif  // TABSEL_OPTIMIZER_H_
