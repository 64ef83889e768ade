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

#ifndef TABSEL_MATRIX_H_
#define TABSEL_MATRIX_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabsel {

using Real = double;

// Raised when operand shapes are incompatible. The message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a NaN or infinity is detected by an explicit finiteness check.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major 2-D array. Every activation, weight and mask in the model is
// one of these.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<Real> data);

  static Matrix FromRows(std::initializer_list<std::initializer_list<Real>> rows);
  static Matrix Identity(std::size_t n);
  static Matrix RowVector(std::span<const Real> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  std::span<Real> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const Real> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }

  void Fill(Real v);
  bool SameShape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool AllFinite() const;
  // Throws NonFiniteError naming `context` and the first offending entry.
  void CheckFinite(const std::string& context) const;

  // "RxC".
  std::string ShapeString() const;

  // Rows [begin, end) as a new matrix.
  Matrix RowSlice(std::size_t begin, std::size_t end) const;
  // Gathers the given rows in order.
  Matrix GatherRows(std::span<const std::size_t> indices) const;

  Matrix& operator+=(const Matrix& other);

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

// Plain (tape-free) kernels. The autodiff ops in ops.h are built on these.
Matrix MatMul(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix MatMulTransA(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix MatMulTransB(const Matrix& a, const Matrix& b);
Matrix Transpose(const Matrix& a);

// Column sums as a 1xC row vector.
Matrix ColumnSums(const Matrix& a);

// Largest |a - b| over all entries; shapes must agree.
Real MaxAbsDiff(const Matrix& a, const Matrix& b);

void RequireSameShape(const Matrix& a, const Matrix& b, const char* op);

}  // namespace tabsel

#endif  // TABSEL_MATRIX_H_
