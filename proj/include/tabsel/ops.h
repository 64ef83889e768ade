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

#ifndef TABSEL_OPS_H_
#define TABSEL_OPS_H_

#include <cstddef>
#include <span>

#include "tabsel/matrix.h"
#include "tabsel/tape.h"

namespace tabsel {

// Differentiable primitives. Each records its analytic backward rule on the
// tape that owns its operands.

// dA = dC * B^T, dB = A^T * dC.
Var MatMul(Var a, Var b);

Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var x, Real s);
Var AddScalar(Var x, Real c);
// Broadcasts the 1xC `row` over every row of `x`.
Var AddRowBroadcast(Var x, Var row);

// Subgradient 0 at x == 0.
Var Relu(Var x);
Var Sigmoid(Var x);

// Columns [begin, end).
Var SliceCols(Var x, std::size_t begin, std::size_t end);

// 1x1 reductions.
Var Sum(Var x);
Var Mean(Var x);

// Row-wise Euclidean projection onto the probability simplex. When `allowed`
// is given, entries where it is zero are left out of the projection and get
// exactly zero weight (a row with nothing allowed is projected unrestricted).
Var Sparsemax(Var z, const Matrix* allowed = nullptr);

// Sum over all entries of -m * log(m + eps), as a 1x1 value.
Var EntropySum(Var m, Real eps);

// Mean over rows of softmax cross entropy; labels[b] indexes the true column.
Var SoftmaxCrossEntropy(Var logits, std::span<const int> labels);

// Mean over all entries of (pred - target)^2.
Var MeanSquaredError(Var pred, const Matrix& target);

// Plain kernels shared with tests and inference paths.
Matrix SparsemaxForward(const Matrix& z, const Matrix* allowed = nullptr);
Matrix SigmoidForward(const Matrix& x);
Matrix SoftmaxRows(const Matrix& logits);

}  // namespace tabsel

#endif  // TABSEL_OPS_H_
