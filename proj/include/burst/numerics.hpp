/*
Copyright 2026 The BurstSim Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

// Dense row-major matrices and the stable softmax / logsumexp primitives the
// attention passes are built from. Everything is double precision and every
// reduction runs in ascending index order, so repeated runs are bit-identical.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "burst/error.hpp"

namespace burst {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    detail::require_shape(data_.size() == rows_ * cols_,
                          "Matrix: data length " + std::to_string(data_.size()) +
                              " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }

  // Row-by-row literal, e.g. Matrix{{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      detail::require_shape(r.size() == cols_, "Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  detail::require_shape(a.cols() == b.rows(), "matmul: " + std::to_string(a.rows()) + "x" +
                                                  std::to_string(a.cols()) + " * " +
                                                  std::to_string(b.rows()) + "x" +
                                                  std::to_string(b.cols()));
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

// a * b^T without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  detail::require_shape(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      out(i, j) = acc;
    }
  }
  return out;
}

// a^T * b without materializing the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  detail::require_shape(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, i) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline void add_inplace(Matrix& acc, const Matrix& x) {
  detail::require_shape(acc.rows() == x.rows() && acc.cols() == x.cols(), "add_inplace");
  auto dst = acc.data();
  auto src = x.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

inline void scale_inplace(Matrix& m, double s) {
  for (double& x : m.data()) x *= s;
}

// Logsumexp of one row with max subtraction; an all -inf row yields -inf.
inline double logsumexp(std::span<const double> row) {
  double m = kNegInf;
  for (double x : row) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : row) acc += std::exp(x - m);
  return m + std::log(acc);
}

inline Vector row_logsumexp(const Matrix& s) {
  detail::require_shape(s.cols() > 0, "row_logsumexp: empty rows");
  Vector out(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) out[i] = logsumexp(s.row(i));
  return out;
}

// log(exp(a) + exp(b)) with -inf as the identity element.
inline double lse_merge(double a, double b) noexcept {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline Vector lse_merge(const Vector& a, const Vector& b) {
  detail::require_shape(a.size() == b.size(), "lse_merge: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = lse_merge(a[i], b[i]);
  return out;
}

inline Matrix row_softmax(const Matrix& s) {
  const Vector lse = row_logsumexp(s);
  Matrix p(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    if (lse[i] == kNegInf) {
      throw NumericalError("row_softmax: row " + std::to_string(i) + " is fully masked");
    }
    for (std::size_t j = 0; j < s.cols(); ++j) p(i, j) = std::exp(s(i, j) - lse[i]);
  }
  return p;
}

inline Vector rowsum_hadamard(const Matrix& a, const Matrix& b) {
  detail::require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                        "rowsum_hadamard: shape mismatch");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * b(i, j);
    out[i] = acc;
  }
  return out;
}

// Entries are uniform in [-1, 1): the top 53 bits of successive
// std::mt19937_64 draws scaled to [0, 1), then mapped affinely. mt19937_64 is
// bit-exact across standard libraries, unlike std::uniform_real_distribution.
inline Matrix seeded_random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  Matrix m(rows, cols);
  for (double& x : m.data()) {
    const double unit = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    x = 2.0 * unit - 1.0;
  }
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  detail::require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a.data()[i] - b.data()[i]);
    if (std::isnan(d)) return d;
    m = std::max(m, d);
  }
  return m;
}

// Elementwise max |a - b| where equal infinities count as zero difference.
inline double max_abs_diff(const Vector& a, const Vector& b) {
  detail::require_shape(a.size() == b.size(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    const double d = std::abs(a[i] - b[i]);
    if (std::isnan(d)) return d;
    m = std::max(m, d);
  }
  return m;
}

// Rows of `m` at the given 0-based indices, in order.
inline Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = m.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

inline void scatter_rows(Matrix& dst, const Matrix& src, std::span<const std::size_t> rows) {
  detail::require_shape(src.rows() == rows.size() && src.cols() == dst.cols(), "scatter_rows");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto s = src.row(r);
    std::copy(s.begin(), s.end(), dst.row(rows[r]).begin());
  }
}

}  // namespace burst
