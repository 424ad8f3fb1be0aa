// pit/matrix.h

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

#ifndef PIT_MATRIX_H_
#define PIT_MATRIX_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pit {

/// Dense row-major matrix of doubles. Value type; copies are deep.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Row-major nested initializer, e.g. Matrix{{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix FromRowMajor(std::size_t rows, std::size_t cols,
                             std::span<const double> values);

  std::size_t Rows() const { return rows_; }
  std::size_t Cols() const { return cols_; }
  std::size_t Size() const { return data_.size(); }
  bool Empty() const { return data_.empty(); }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> Data() { return data_; }
  std::span<const double> Data() const { return data_; }
  std::span<double> Row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> Row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void SetZero();
  bool SameShape(const Matrix &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool AllFinite() const;
  /// "RxC", used in error messages.
  std::string ShapeString() const;

  friend bool operator==(const Matrix &a, const Matrix &b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Accumulating GEMM kernels. Shapes are checked by the callers.
// out += a * b
void GemmAccumulate(const Matrix &a, const Matrix &b, Matrix *out);
// out += a * b^T
void GemmAccumulateNT(const Matrix &a, const Matrix &b, Matrix *out);
// out += a^T * b
void GemmAccumulateTN(const Matrix &a, const Matrix &b, Matrix *out);

}  // namespace pit

#endif  // PIT_MATRIX_H_
