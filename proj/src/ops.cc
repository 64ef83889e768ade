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

#include "tabsel/ops.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace tabsel {

namespace {

template <typename F>
Matrix Map(const Matrix& x, F f) {
  Matrix out(x.rows(), x.cols());
  const Real* src = x.data();
  Real* dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Matrix Zip(const Matrix& a, const Matrix& b, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

Matrix ScaledCopy(const Matrix& x, Real s) {
  return Map(x, [s](Real v) { return v * s; });
}

}  // namespace

Var MatMul(Var a, Var b) {
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().Record(
      "matmul", tabsel::MatMul(a.value(), b.value()), {a, b},
      [ia, ib](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        if (t.requires_grad(ia)) t.AccumulateGrad(ia, MatMulTransB(g, t.value(ib)));
        if (t.requires_grad(ib)) t.AccumulateGrad(ib, MatMulTransA(t.value(ia), g));
      });
}

Var Add(Var a, Var b) {
  RequireSameShape(a.value(), b.value(), "add");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().Record(
      "add", Zip(a.value(), b.value(), std::plus<Real>()), {a, b},
      [ia, ib](Tape& t, std::size_t self) {
        t.AccumulateGrad(ia, t.grad(self));
        t.AccumulateGrad(ib, t.grad(self));
      });
}

Var Sub(Var a, Var b) {
  RequireSameShape(a.value(), b.value(), "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().Record(
      "sub", Zip(a.value(), b.value(), std::minus<Real>()), {a, b},
      [ia, ib](Tape& t, std::size_t self) {
        t.AccumulateGrad(ia, t.grad(self));
        if (t.requires_grad(ib)) t.AccumulateGrad(ib, ScaledCopy(t.grad(self), -1.0));
      });
}

Var Mul(Var a, Var b) {
  RequireSameShape(a.value(), b.value(), "mul");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().Record(
      "mul", Zip(a.value(), b.value(), std::multiplies<Real>()), {a, b},
      [ia, ib](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        if (t.requires_grad(ia))
          t.AccumulateGrad(ia, Zip(g, t.value(ib), std::multiplies<Real>()));
        if (t.requires_grad(ib))
          t.AccumulateGrad(ib, Zip(g, t.value(ia), std::multiplies<Real>()));
      });
}

Var Scale(Var x, Real s) {
  const std::size_t ix = x.id();
  return x.tape().Record("scale", ScaledCopy(x.value(), s), {x},
                         [ix, s](Tape& t, std::size_t self) {
                           t.AccumulateGrad(ix, ScaledCopy(t.grad(self), s));
                         });
}

Var AddScalar(Var x, Real c) {
  const std::size_t ix = x.id();
  return x.tape().Record("add_scalar",
                         Map(x.value(), [c](Real v) { return v + c; }), {x},
                         [ix](Tape& t, std::size_t self) {
                           t.AccumulateGrad(ix, t.grad(self));
                         });
}

Var AddRowBroadcast(Var x, Var row) {
  const Matrix& xv = x.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw ShapeError("row-broadcast-add: expected 1x" +
                     std::to_string(xv.cols()) + " row, got " +
                     rv.ShapeString() + " for " + xv.ShapeString());
  }
  Matrix out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += rv[j];
  }
  const std::size_t ix = x.id(), ir = row.id();
  return x.tape().Record("row_broadcast_add", std::move(out), {x, row},
                         [ix, ir](Tape& t, std::size_t self) {
                           t.AccumulateGrad(ix, t.grad(self));
                           if (t.requires_grad(ir))
                             t.AccumulateGrad(ir, ColumnSums(t.grad(self)));
                         });
}

Var Relu(Var x) {
  const std::size_t ix = x.id();
  return x.tape().Record(
      "relu", Map(x.value(), [](Real v) { return v > 0.0 ? v : 0.0; }), {x},
      [ix](Tape& t, std::size_t self) {
        t.AccumulateGrad(ix, Zip(t.grad(self), t.value(ix), [](Real g, Real v) {
                           return v > 0.0 ? g : 0.0;
                         }));
      });
}

Matrix SigmoidForward(const Matrix& x) {
  return Map(x, [](Real v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const Real e = std::exp(v);
    return e / (1.0 + e);
  });
}

Var Sigmoid(Var x) {
  const std::size_t ix = x.id();
  return x.tape().Record(
      "sigmoid", SigmoidForward(x.value()), {x},
      [ix](Tape& t, std::size_t self) {
        t.AccumulateGrad(ix, Zip(t.grad(self), t.value(self), [](Real g, Real s) {
                           return g * s * (1.0 - s);
                         }));
      });
}

Var SliceCols(Var x, std::size_t begin, std::size_t end) {
  const Matrix& xv = x.value();
  if (begin > end || end > xv.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of range for " +
                     xv.ShapeString());
  }
  const std::size_t width = end - begin;
  Matrix out(xv.rows(), width);
  for (std::size_t i = 0; i < xv.rows(); ++i)
    std::copy_n(xv.data() + i * xv.cols() + begin, width, out.data() + i * width);
  const std::size_t ix = x.id();
  return x.tape().Record(
      "slice_cols", std::move(out), {x},
      [ix, begin, width](Tape& t, std::size_t self) {
        if (!t.requires_grad(ix)) return;
        const Matrix& g = t.grad(self);
        Matrix& dst = t.MutableGrad(ix);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < width; ++j) dst(i, begin + j) += g(i, j);
      });
}

Var Sum(Var x) {
  const Matrix& xv = x.value();
  const Real total = std::accumulate(xv.values().begin(), xv.values().end(), 0.0);
  const std::size_t ix = x.id();
  return x.tape().Record("sum", Matrix(1, 1, total), {x},
                         [ix](Tape& t, std::size_t self) {
                           const Matrix& src = t.value(ix);
                           t.AccumulateGrad(
                               ix, Matrix(src.rows(), src.cols(), t.grad(self)[0]));
                         });
}

Var Mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ShapeError("mean of an empty matrix");
  return Scale(Sum(x), 1.0 / static_cast<Real>(n));
}

Matrix SparsemaxForward(const Matrix& z, const Matrix* allowed) {
  if (allowed != nullptr) RequireSameShape(z, *allowed, "sparsemax support mask");
  Matrix out(z.rows(), z.cols());
  const std::size_t d = z.cols();
  std::vector<std::size_t> order;
  order.reserve(d);
  for (std::size_t b = 0; b < z.rows(); ++b) {
    const auto row = z.row(b);
    order.clear();
    for (std::size_t j = 0; j < d; ++j)
      if (allowed == nullptr || (*allowed)(b, j) != 0.0) order.push_back(j);
    // A row with nothing allowed falls back to the unrestricted projection.
    if (order.empty())
      for (std::size_t j = 0; j < d; ++j) order.push_back(j);
    Real top = row[order[0]];
    for (std::size_t j : order) top = std::max(top, row[j]);
    std::stable_sort(order.begin(), order.end(),
                     [&row](std::size_t a, std::size_t c) { return row[a] > row[c]; });
    // Work on z - max(z): the support and output depend only on differences.
    Real cumsum = 0.0;
    Real support_sum = 0.0;
    std::size_t support = 0;
    for (std::size_t k = 1; k <= order.size(); ++k) {
      const Real zk = row[order[k - 1]] - top;
      cumsum += zk;
      if (1.0 + static_cast<Real>(k) * zk > cumsum) {
        support = k;
        support_sum = cumsum;
      }
    }
    const Real tau = (support_sum - 1.0) / static_cast<Real>(support);
    auto o = out.row(b);
    for (std::size_t k = 0; k < support; ++k) {
      const std::size_t j = order[k];
      o[j] = std::max((row[j] - top) - tau, 0.0);
    }
  }
  return out;
}

Var Sparsemax(Var z, const Matrix* allowed) {
  if (!z.value().AllFinite()) z.value().CheckFinite("sparsemax input");
  const std::size_t iz = z.id();
  return z.tape().Record(
      "sparsemax", SparsemaxForward(z.value(), allowed), {z},
      [iz](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& p = t.value(self);
        Matrix dz(g.rows(), g.cols());
        for (std::size_t b = 0; b < g.rows(); ++b) {
          Real sum = 0.0;
          std::size_t count = 0;
          for (std::size_t j = 0; j < g.cols(); ++j) {
            if (p(b, j) > 0.0) {
              sum += g(b, j);
              ++count;
            }
          }
          const Real mean = count > 0 ? sum / static_cast<Real>(count) : 0.0;
          for (std::size_t j = 0; j < g.cols(); ++j)
            dz(b, j) = p(b, j) > 0.0 ? g(b, j) - mean : 0.0;
        }
        t.AccumulateGrad(iz, dz);
      });
}

Var EntropySum(Var m, Real eps) {
  const Matrix& mv = m.value();
  Real total = 0.0;
  for (Real v : mv.values()) total -= v * std::log(v + eps);
  const std::size_t im = m.id();
  return m.tape().Record(
      "entropy_sum", Matrix(1, 1, total), {m},
      [im, eps](Tape& t, std::size_t self) {
        const Real g = t.grad(self)[0];
        t.AccumulateGrad(im, Map(t.value(im), [g, eps](Real v) {
                           return -g * (std::log(v + eps) + v / (v + eps));
                         }));
      });
}

Matrix SoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const auto row = logits.row(b);
    const Real top = *std::max_element(row.begin(), row.end());
    Real norm = 0.0;
    auto o = out.row(b);
    for (std::size_t j = 0; j < row.size(); ++j) {
      o[j] = std::exp(row[j] - top);
      norm += o[j];
    }
    for (Real& v : o) v /= norm;
  }
  return out;
}

Var SoftmaxCrossEntropy(Var logits, std::span<const int> labels) {
  const Matrix& lv = logits.value();
  if (labels.size() != lv.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + lv.ShapeString() + " logits");
  }
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= lv.cols()) {
      throw std::out_of_range("label " + std::to_string(labels[b]) +
                              " at row " + std::to_string(b) +
                              " outside [0, " + std::to_string(lv.cols()) + ")");
    }
  }
  Matrix probs = SoftmaxRows(lv);
  Real loss = 0.0;
  for (std::size_t b = 0; b < lv.rows(); ++b) {
    const auto row = lv.row(b);
    const Real top = *std::max_element(row.begin(), row.end());
    Real norm = 0.0;
    for (Real v : row) norm += std::exp(v - top);
    loss += top + std::log(norm) - row[labels[b]];
  }
  const Real inv_b = 1.0 / static_cast<Real>(lv.rows());
  std::vector<int> y(labels.begin(), labels.end());
  const std::size_t il = logits.id();
  return logits.tape().Record(
      "softmax_cross_entropy", Matrix(1, 1, loss * inv_b), {logits},
      [il, inv_b, probs = std::move(probs), y = std::move(y)](Tape& t,
                                                              std::size_t self) {
        const Real g = t.grad(self)[0] * inv_b;
        Matrix d = probs;
        for (std::size_t b = 0; b < d.rows(); ++b) d(b, y[b]) -= 1.0;
        for (Real& v : d.values()) v *= g;
        t.AccumulateGrad(il, d);
      });
}

Var MeanSquaredError(Var pred, const Matrix& target) {
  RequireSameShape(pred.value(), target, "mean_squared_error");
  const Matrix& pv = pred.value();
  Real total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const Real e = pv[i] - target[i];
    total += e * e;
  }
  const Real inv_n = 1.0 / static_cast<Real>(pv.size());
  const std::size_t ip = pred.id();
  return pred.tape().Record(
      "mean_squared_error", Matrix(1, 1, total * inv_n), {pred},
      [ip, inv_n, target](Tape& t, std::size_t self) {
        const Real g = 2.0 * t.grad(self)[0] * inv_n;
        t.AccumulateGrad(ip, Zip(t.value(ip), target, [g](Real p, Real y) {
                           return g * (p - y);
                         }));
      });
}

}  // namespace tabsel
