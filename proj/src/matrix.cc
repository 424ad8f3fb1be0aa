// pit/matrix.cc

// Copyright 2026  PIT-ASR Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "pit/matrix.h"

#include <algorithm>
#include <cmath>

#include "pit/errors.h"

namespace pit {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto &row : rows) {
    if (row.size() != cols_) throw ShapeError("ragged matrix initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::FromRowMajor(std::size_t rows, std::size_t cols,
                            std::span<const double> values) {
  if (values.size() != rows * cols) {
    throw ShapeError("FromRowMajor: " + std::to_string(values.size()) +
                     " values for shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

void Matrix::SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Matrix::ShapeString() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void GemmAccumulate(const Matrix &a, const Matrix &b, Matrix *out) {
  const std::size_t m = a.Rows(), k = a.Cols(), n = b.Cols();
  const double *pa = a.Data().data();
  const double *pb = b.Data().data();
  double *po = out->Data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double *orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double *brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

void GemmAccumulateNT(const Matrix &a, const Matrix &b, Matrix *out) {
  // a: m x k, b: n x k, out: m x n
  const std::size_t m = a.Rows(), k = a.Cols(), n = b.Rows();
  const double *pa = a.Data().data();
  const double *pb = b.Data().data();
  double *po = out->Data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double *arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double *brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      po[i * n + j] += acc;
    }
  }
}

void GemmAccumulateTN(const Matrix &a, const Matrix &b, Matrix *out) {
  // a: k x m, b: k x n, out: m x n
  const std::size_t k = a.Rows(), m = a.Cols(), n = b.Cols();
  const double *pa = a.Data().data();
  const double *pb = b.Data().data();
  double *po = out->Data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const double *arow = pa + p * m;
    const double *brow = pb + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double *orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace pit
