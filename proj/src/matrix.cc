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

#include "tabsel/matrix.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Core>

namespace tabsel {

Matrix::Matrix(std::size_t rows, std::size_t cols, Real fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    std::ostringstream msg;
    msg << "matrix data length " << data_.size() << " does not match shape "
        << rows << "x" << cols;
    throw ShapeError(msg.str());
  }
}

Matrix Matrix::FromRows(
    std::initializer_list<std::initializer_list<Real>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<Real> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer for Matrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::RowVector(std::span<const Real> values) {
  return Matrix(1, values.size(),
                std::vector<Real>(values.begin(), values.end()));
}

void Matrix::Fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](Real v) { return std::isfinite(v); });
}

void Matrix::CheckFinite(const std::string& context) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      std::ostringstream msg;
      msg << "non-finite value " << data_[i] << " in " << context << " at ("
          << i / cols_ << ", " << i % cols_ << ") of " << ShapeString();
      throw NonFiniteError(msg.str());
    }
  }
}

std::string Matrix::ShapeString() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix Matrix::RowSlice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) {
    throw ShapeError("row slice [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of range for " +
                     ShapeString());
  }
  return Matrix(end - begin, cols_,
                std::vector<Real>(data_.begin() + begin * cols_,
                                  data_.begin() + end * cols_));
}

Matrix Matrix::GatherRows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw ShapeError("gather index out of range");
    std::copy_n(data_.begin() + indices[i] * cols_, cols_,
                out.data_.begin() + i * cols_);
  }
  return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  RequireSameShape(*this, other, "+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

void RequireSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.SameShape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.ShapeString() +
                     " vs " + b.ShapeString());
  }
}

namespace {

using RowMajor = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutableMap = Eigen::Map<RowMajor>;

ConstMap View(const Matrix& m) {
  return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

MutableMap View(Matrix& m) {
  return MutableMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                    static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

Matrix MatMul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " + a.ShapeString() +
                     " x " + b.ShapeString());
  }
  Matrix c(a.rows(), b.cols());
  if (!c.empty()) View(c).noalias() = View(a) * View(b);
  return c;
}

Matrix MatMulTransA(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul(A^T, B): row counts disagree, " + a.ShapeString() +
                     " vs " + b.ShapeString());
  }
  Matrix c(a.cols(), b.cols());
  if (!c.empty()) View(c).noalias() = View(a).transpose() * View(b);
  return c;
}

Matrix MatMulTransB(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul(A, B^T): column counts disagree, " +
                     a.ShapeString() + " vs " + b.ShapeString());
  }
  Matrix c(a.rows(), b.rows());
  if (!c.empty()) View(c).noalias() = View(a) * View(b).transpose();
  return c;
}

Matrix Transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix ColumnSums(const Matrix& a) {
  Matrix s(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const Real* r = a.data() + i * a.cols();
    for (std::size_t j = 0; j < a.cols(); ++j) s[j] += r[j];
  }
  return s;
}

Real MaxAbsDiff(const Matrix& a, const Matrix& b) {
  RequireSameShape(a, b, "max_abs_diff");
  Real worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace tabsel
