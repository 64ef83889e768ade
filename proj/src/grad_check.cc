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

#include "tabsel/grad_check.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tabsel {

namespace {

Real EvaluateLoss(const std::string& op, const LossBuilder& build) {
  Tape tape(/*check_finite=*/true);
  Var loss;
  try {
    loss = build(tape);
  } catch (const NonFiniteError& e) {
    throw NonFiniteError("grad_check '" + op + "': " + e.what());
  }
  const Matrix& v = loss.value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("grad_check '" + op + "': loss must be 1x1, got " +
                     v.ShapeString());
  }
  return v[0];
}

}  // namespace

GradReport GradCheck(const std::string& op, const LossBuilder& build,
                     std::span<Parameter* const> params,
                     const GradCheckOptions& options) {
  for (Parameter* p : params) {
    p->value.CheckFinite("grad_check '" + op + "' parameter '" + p->name + "'");
    p->ZeroGrad();
  }

  {
    Tape tape(/*check_finite=*/true);
    Var loss;
    try {
      loss = build(tape);
      if (loss.value().size() != 1) {
        throw ShapeError("grad_check '" + op + "': loss must be 1x1, got " +
                         loss.value().ShapeString());
      }
      tape.Backward(loss);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("grad_check '" + op + "': " + e.what());
    }
  }
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  GradReport report;
  report.op = op;
  report.tolerance = options.tolerance;
  // Cancellation noise of a central difference grows like |L| * eps / h.
  const Real loss_scale = std::max(std::abs(EvaluateLoss(op, build)), Real{1});
  auto floor_at = [&](Real h) {
    return std::max(options.absolute_floor,
                    options.roundoff_ulps * std::numeric_limits<Real>::epsilon() * loss_scale / h);
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& value = params[k]->value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const Real exact = analytic[k][i];
      auto error_at = [&](Real h) {
        const Real saved = value[i];
        value[i] = saved + h;
        const Real plus = EvaluateLoss(op, build);
        value[i] = saved - h;
        const Real minus = EvaluateLoss(op, build);
        value[i] = saved;
        const Real numeric = (plus - minus) / (2.0 * h);
        const Real diff = std::abs(exact - numeric);
        if (diff <= floor_at(h)) return Real{0};
        return diff / std::max({std::abs(exact), std::abs(numeric), 1e-8});
      };
      Real rel = error_at(options.step);
      if (rel > options.tolerance && options.refine_step > 0.0)
        rel = std::min(rel, error_at(options.refine_step));
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_param = k;
        report.worst_coordinate = {i / value.cols(), i % value.cols()};
      }
    }
  }
  report.pass = report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace tabsel
