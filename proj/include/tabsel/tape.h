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

#ifndef TABSEL_TAPE_H_
#define TABSEL_TAPE_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tabsel/matrix.h"

namespace tabsel {

// A trainable matrix and its accumulated gradient. Parameters outlive tapes;
// a tape only borrows them for one forward/backward pass.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix value);

  void ZeroGrad();
  std::size_t size() const { return value.size(); }

  std::string name;
  Matrix value;
  Matrix grad;
};

class Tape;

// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recording of matrix operations. Single-threaded; one tape per
// forward pass.
class Tape {
 public:
  // Propagates the node's gradient (tape.grad(node)) into its parents.
  using BackwardFn = std::function<void(Tape& tape, std::size_t node)>;

  explicit Tape(bool check_finite = false) : check_finite_(check_finite) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  // Leaf whose gradient is kept on the tape after Backward().
  Var Input(Matrix value);
  // Leaf bound to `param`; Backward() adds the gradient into param.grad.
  Var Param(Parameter& param);

  Var Record(std::string_view op, Matrix value, std::vector<Var> parents,
             BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule in
  // reverse order. `loss` must be 1x1.
  void Backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const std::string& op_name(std::size_t id) const { return nodes_[id].op; }
  std::size_t parent(std::size_t id, std::size_t k) const {
    return nodes_[id].parents[k];
  }

  // Adds g into the gradient buffer of `id`; no-op for constants.
  void AccumulateGrad(std::size_t id, const Matrix& g);
  // Gradient buffer of `id`, zero-initialized on first access.
  Matrix& MutableGrad(std::size_t id);

  bool check_finite() const { return check_finite_; }
  void set_check_finite(bool on) { check_finite_ = on; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Var Push(Node node);

  // A deque keeps node values at fixed addresses as the tape grows.
  std::deque<Node> nodes_;
  bool check_finite_;
  bool backward_done_ = false;
};

}  // namespace tabsel

#endif  // TABSEL_TAPE_H_
