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

#ifndef TABSEL_GRAD_CHECK_H_
#define TABSEL_GRAD_CHECK_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>

#include "tabsel/matrix.h"
#include "tabsel/tape.h"

namespace tabsel {

struct GradReport {
  std::string op;
  Real max_relative_error = 0.0;
  // Parameter index and (row, col) of the worst coordinate.
  std::size_t worst_param = 0;
  std::pair<std::size_t, std::size_t> worst_coordinate{0, 0};
  Real tolerance = 0.0;
  bool pass = false;
};

struct GradCheckOptions {
  Real tolerance = 1e-4;
  Real step = 1e-5;
  // Second step tried on coordinates that fail at `step`. Near sparsemax
  // support changes or low-variance batches the loss curves sharply, and the
  // central difference converges only for smaller steps. 0 disables.
  Real refine_step = 1e-6;
  // Coordinates whose analytic and numeric gradients differ by at most
  // max(absolute_floor, roundoff_ulps * eps * max(|L|, 1) / h) count as
  // agreeing, whatever their relative error. This matters only where the
  // true gradient is near zero, e.g. biases feeding a batch norm.
  Real absolute_floor = 1e-9;
  Real roundoff_ulps = 32.0;
};

// Builds the scalar loss on the given tape from the parameters under test.
using LossBuilder = std::function<Var(Tape&)>;

// Compares the tape's analytic gradient of every entry of every parameter
// with a central finite difference, keeping the better of `step` and
// `refine_step`. Relative error per coordinate is
// |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
GradReport GradCheck(const std::string& op, const LossBuilder& build,
                     std::span<Parameter* const> params,
                     const GradCheckOptions& options = {});

}  // namespace tabsel

#endif  // TABSEL_GRAD_CHECK_H_
