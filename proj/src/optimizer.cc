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

#include "tabsel/optimizer.h"

#include <cmath>
#include <stdexcept>

namespace tabsel {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::ZeroGrad() {
  for (Parameter* p : params_) p->ZeroGrad();
}

void Adam::Step(Real lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be > 0");
  for (Parameter* p : params_) {
    if (!p->grad.SameShape(p->value)) {
      throw ShapeError("adam: gradient of '" + p->name + "' is " +
                       p->grad.ShapeString() + ", parameter is " +
                       p->value.ShapeString());
    }
    if (!p->grad.AllFinite()) {
      throw NonFiniteError("adam: non-finite gradient for parameter '" +
                           p->name + "'");
    }
  }
  ++step_;
  const Real b1 = options_.beta1, b2 = options_.beta2;
  const Real correction1 = 1.0 - std::pow(b1, static_cast<Real>(step_));
  const Real correction2 = 1.0 - std::pow(b2, static_cast<Real>(step_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Matrix& w = params_[k]->value;
    const Matrix& g = params_[k]->grad;
    Matrix& m = m_[k];
    Matrix& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const Real m_hat = m[i] / correction1;
      const Real v_hat = v[i] / correction2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

Real LrSchedule::At(std::size_t iteration) const {
  const std::size_t stairs = interval == 0 ? 0 : iteration / interval;
  return base * std::pow(decay, static_cast<Real>(stairs));
}

Real ClipGradNorm(const std::vector<Parameter*>& params, Real max_norm) {
  Real sq = 0.0;
  for (const Parameter* p : params)
    for (Real g : p->grad.values()) sq += g * g;
  const Real norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Real s = max_norm / norm;
    for (Parameter* p : params)
      for (Real& g : p->grad.values()) g *= s;
  }
  return norm;
}

}  // namespace tabsel
