// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <initializer_list>
#include <span>
#include <string>

namespace irsce {

using cdouble = std::complex<double>;

/// Dense complex double matrix, row-major, entries stored interleaved (re, im).
/// Thin value type over Eigen; the free functions below check shapes and throw
/// DimensionError instead of asserting.
class CMatrix {
 public:
  using Storage = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  CMatrix() = default;
  CMatrix(int rows, int cols);
  CMatrix(int rows, int cols, std::initializer_list<cdouble> row_major);
  explicit CMatrix(Storage m) : m_(std::move(m)) {}

  static CMatrix identity(int n);

  int rows() const noexcept { return static_cast<int>(m_.rows()); }
  int cols() const noexcept { return static_cast<int>(m_.cols()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(m_.size()); }
  bool empty() const noexcept { return m_.size() == 0; }

  cdouble& operator()(int r, int c) { return m_(r, c); }
  const cdouble& operator()(int r, int c) const { return m_(r, c); }

  std::span<cdouble> entries() noexcept { return {m_.data(), size()}; }
  std::span<const cdouble> entries() const noexcept { return {m_.data(), size()}; }

  Storage& eigen() noexcept { return m_; }
  const Storage& eigen() const noexcept { return m_; }

  bool all_finite() const noexcept;
  std::string shape() const;

  friend bool operator==(const CMatrix& a, const CMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.m_ == b.m_;
  }

 private:
  Storage m_;
};

CMatrix multiply(const CMatrix& a, const CMatrix& b);
CMatrix hermitian_transpose(const CMatrix& a);
CMatrix add(const CMatrix& a, const CMatrix& b);
CMatrix subtract(const CMatrix& a, const CMatrix& b);
CMatrix scale(const CMatrix& a, cdouble s);
double frobenius_norm(const CMatrix& a);
double frobenius_norm_sq(const CMatrix& a);

/// Column j of `a` as an n x 1 matrix.
CMatrix column(const CMatrix& a, int j);

/// Columns [first, first + count) of `a`.
CMatrix columns(const CMatrix& a, int first, int count);

/// Solves A X = B for square A with partial-pivot LU; throws DimensionError on
/// shape mismatch.
CMatrix solve(const CMatrix& a, const CMatrix& b);

}  // namespace irsce
