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

#include "tabsel/tape.h"

#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace tabsel {

namespace {

#if defined(__GLIBC__)
// Every step allocates and frees the same multi-megabyte buffers. Keeping
// them in the heap avoids an mmap/munmap pair and fresh page faults for each.
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

}  // namespace

Parameter::Parameter(std::string name, Matrix value)
    : name(std::move(name)),
      value(std::move(value)),
      grad(this->value.rows(), this->value.cols()) {}

void Parameter::ZeroGrad() {
  if (!grad.SameShape(value)) {
    grad = Matrix(value.rows(), value.cols());
  } else {
    grad.Fill(0.0);
  }
}

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::Push(Node node) {
  if (check_finite_) node.value.CheckFinite("op '" + node.op + "'");
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::Constant(Matrix value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return Push(std::move(n));
}

Var Tape::Input(Matrix value) {
  Node n;
  n.op = "input";
  n.value = std::move(value);
  n.requires_grad = true;
  return Push(std::move(n));
}

Var Tape::Param(Parameter& param) {
  Node n;
  n.op = "param:" + param.name;
  n.value = param.value;
  n.param = &param;
  n.requires_grad = true;
  return Push(std::move(n));
}

Var Tape::Record(std::string_view op, Matrix value, std::vector<Var> parents,
                 BackwardFn backward) {
  Node n;
  n.op = std::string(op);
  n.value = std::move(value);
  n.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (&p.tape() != this) {
      throw std::logic_error("op '" + n.op + "' mixes nodes of two tapes");
    }
    n.parents.push_back(p.id());
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return Push(std::move(n));
}

// Empty when no gradient reached the node.
const Matrix& Tape::grad(std::size_t id) const { return nodes_[id].grad; }

void Tape::AccumulateGrad(std::size_t id, const Matrix& g) {
  if (!nodes_[id].requires_grad) return;
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    RequireSameShape(n.value, g, ("gradient of '" + n.op + "'").c_str());
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Matrix& Tape::MutableGrad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::Backward(Var loss) {
  if (&loss.tape() != this) throw std::logic_error("loss from another tape");
  if (backward_done_) throw std::logic_error("Backward() called twice");
  const Matrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + lv.ShapeString());
  }
  backward_done_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix(1, 1, 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (check_finite_) n.grad.CheckFinite("gradient of op '" + n.op + "'");
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      if (!n.param->grad.SameShape(n.param->value)) n.param->ZeroGrad();
      n.param->grad += n.grad;
    }
  }
}

}  // namespace tabsel
