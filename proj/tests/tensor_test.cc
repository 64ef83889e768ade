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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tabsel/grad_check.h"
#include "tabsel/matrix.h"
#include "tabsel/ops.h"
#include "tabsel/tape.h"

namespace tabsel {
namespace {

Matrix RandomMatrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<Real> n(0.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

Matrix NaiveProduct(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Real s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

TEST(Matrix, IdentityProductIsExact) {
  std::mt19937_64 rng(1);
  const Matrix x = RandomMatrix(2, 5, rng);
  EXPECT_EQ(MatMul(Matrix::Identity(2), x), x);
  EXPECT_EQ(MatMul(x, Matrix::Identity(5)), x);
}

TEST(Matrix, DotProduct) {
  const Matrix c = MatMul(Matrix::FromRows({{1, 2}}), Matrix::FromRows({{3}, {4}}));
  ASSERT_EQ(c.rows(), 1u);
  ASSERT_EQ(c.cols(), 1u);
  EXPECT_EQ(c(0, 0), 11.0);
}

TEST(Matrix, ShapeErrorNamesBothShapes) {
  try {
    MatMul(Matrix(2, 3), Matrix(4, 2));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x2"), std::string::npos) << msg;
  }
}

TEST(Matrix, TransposedKernelsMatchNaiveProduct) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = RandomMatrix(7, 5, rng);
    const Matrix b = RandomMatrix(7, 3, rng);
    const Matrix c = RandomMatrix(4, 5, rng);
    EXPECT_LT(MaxAbsDiff(MatMulTransA(a, b), NaiveProduct(Transpose(a), b)), 1e-12);
    EXPECT_LT(MaxAbsDiff(MatMulTransB(a, c), NaiveProduct(a, Transpose(c))), 1e-12);
    EXPECT_LT(MaxAbsDiff(MatMul(a, Transpose(c)), NaiveProduct(a, Transpose(c))), 1e-12);
  }
}

TEST(Ops, ReluAndSigmoidValues) {
  Tape tape;
  const Var r = Relu(tape.Constant(Matrix::FromRows({{-1, 2}})));
  EXPECT_EQ(r.value(), Matrix::FromRows({{0, 2}}));
  const Var s = Sigmoid(tape.Constant(Matrix::FromRows({{0}})));
  EXPECT_EQ(s.value()(0, 0), 0.5);
}

TEST(Ops, ReluSubgradientAtZeroIsZero) {
  Tape tape;
  const Var x = tape.Input(Matrix::FromRows({{-1, 0, 2}}));
  tape.Backward(Sum(Relu(x)));
  EXPECT_EQ(x.grad(), Matrix::FromRows({{0, 0, 1}}));
}

TEST(Ops, ElementwiseShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(Add(tape.Constant(Matrix(2, 2)), tape.Constant(Matrix(2, 3))), ShapeError);
  EXPECT_THROW(Mul(tape.Constant(Matrix(2, 2)), tape.Constant(Matrix(3, 2))), ShapeError);
  EXPECT_THROW(AddRowBroadcast(tape.Constant(Matrix(2, 2)), tape.Constant(Matrix(1, 3))),
               ShapeError);
}

TEST(GradCheck, SumHasAllOnesGradientAndZeroError) {
  std::mt19937_64 rng(3);
  Parameter x("x", RandomMatrix(3, 4, rng));
  Parameter* params[] = {&x};
  const GradReport r = GradCheck(
      "sum", [&](Tape& t) { return Sum(t.Param(x)); }, params);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.max_relative_error, 0.0);
  EXPECT_EQ(x.grad, Matrix(3, 4, 1.0));
}

TEST(GradCheck, SquaredNormOfProduct) {
  std::mt19937_64 rng(4);
  Parameter w("w", RandomMatrix(3, 3, rng));
  const Matrix x = RandomMatrix(3, 1, rng);
  Parameter* params[] = {&w};
  const GradReport r = GradCheck(
      "norm", [&](Tape& t) {
        const Var y = MatMul(t.Param(w), t.Constant(x));
        return Sum(Mul(y, y));
      },
      params);
  EXPECT_TRUE(r.pass) << r.max_relative_error;
}

// Elementwise and product ops against central differences on 20 random
// instances each, at the stricter 1e-6 level for the simple ones.
TEST(GradCheck, PrimitiveOpsOnRandomInstances) {
  std::mt19937_64 rng(5);
  GradCheckOptions strict;
  strict.tolerance = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Parameter a("a", RandomMatrix(5, 4, rng));
    Parameter b("b", RandomMatrix(4, 3, rng));
    Parameter c("c", RandomMatrix(5, 4, rng));
    Parameter row("row", RandomMatrix(1, 4, rng));
    const Matrix w = RandomMatrix(5, 3, rng);
    const Matrix w2 = RandomMatrix(5, 4, rng);
    Parameter* ab[] = {&a, &b};
    Parameter* ac[] = {&a, &c};
    Parameter* ar[] = {&a, &row};
    auto weighted = [](Tape& t, Var v, const Matrix& m) { return Sum(Mul(v, t.Constant(m))); };

    EXPECT_TRUE(GradCheck("matmul", [&](Tape& t) {
      return weighted(t, MatMul(t.Param(a), t.Param(b)), w); }, ab, strict).pass);
    EXPECT_TRUE(GradCheck("mul", [&](Tape& t) {
      return weighted(t, Mul(t.Param(a), t.Param(c)), w2); }, ac, strict).pass);
    EXPECT_TRUE(GradCheck("add_sub", [&](Tape& t) {
      return weighted(t, Sub(Add(t.Param(a), t.Param(c)), Scale(t.Param(c), 3.0)), w2); },
      ac, strict).pass);
    EXPECT_TRUE(GradCheck("broadcast", [&](Tape& t) {
      return weighted(t, AddRowBroadcast(t.Param(a), t.Param(row)), w2); }, ar, strict).pass);
    EXPECT_TRUE(GradCheck("sigmoid", [&](Tape& t) {
      return weighted(t, Sigmoid(t.Param(a)), w2); }, ac, strict).pass);
    EXPECT_TRUE(GradCheck("relu", [&](Tape& t) {
      return weighted(t, Relu(t.Param(a)), w2); }, ac, strict).pass);
    EXPECT_TRUE(GradCheck("slice_mean", [&](Tape& t) {
      return Mean(Mul(SliceCols(t.Param(a), 1, 3), t.Constant(Matrix(5, 2, 0.7)))); },
      ac, strict).pass);
  }
}

TEST(GradCheck, DoubledBackwardIsCaught) {
  std::mt19937_64 rng(6);
  Parameter x("x", RandomMatrix(2, 3, rng));
  const Matrix w = RandomMatrix(2, 3, rng);
  Parameter* params[] = {&x};
  const GradReport r = GradCheck(
      "doubled", [&](Tape& t) {
        const Var in = t.Param(x);
        const Var y = t.Record("doubled", in.value(), {in}, [](Tape& tp, std::size_t n) {
          Matrix g = tp.grad(n);
          for (auto& v : g.values()) v *= 2.0;
          tp.AccumulateGrad(tp.parent(n, 0), g);
        });
        return Sum(Mul(y, t.Constant(w)));
      },
      params);
  EXPECT_FALSE(r.pass);
  // |2g - g| / max(|2g|, |g|) = 1/2 for every coordinate.
  EXPECT_NEAR(r.max_relative_error, 0.5, 1e-6);
}

TEST(GradCheck, NonScalarLossIsRejected) {
  Parameter x("x", Matrix(2, 2, 1.0));
  Parameter* params[] = {&x};
  EXPECT_THROW(GradCheck("bad", [&](Tape& t) { return t.Param(x); }, params), ShapeError);
}

TEST(GradCheck, NanIsReportedWithOpName) {
  Parameter x("x", Matrix(1, 1, 1.0));
  Parameter* params[] = {&x};
  try {
    GradCheck("nan_op", [&](Tape& t) { return Scale(t.Param(x), std::nan("")); }, params);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("nan_op"), std::string::npos) << e.what();
  }
}

TEST(Tape, FiniteCheckModeFlagsOps) {
  Tape tape(/*check_finite=*/true);
  const Var x = tape.Input(Matrix::FromRows({{1.0, 2.0}}));
  EXPECT_THROW(Scale(x, std::numeric_limits<Real>::infinity()), NonFiniteError);
}

}  // namespace
}  // namespace tabsel
