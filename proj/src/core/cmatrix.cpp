// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/core/cmatrix.hpp"

#include <fmt/format.h>

#include <cmath>

#include "irsce/core/error.hpp"

namespace irsce {
namespace {

void require_same_shape(const char* op, const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(fmt::format("{}: shape mismatch {} vs {}", op, a.shape(), b.shape()));
  }
}

}  // namespace

CMatrix::CMatrix(int rows, int cols) : m_(Storage::Zero(rows, cols)) {
  if (rows < 0 || cols < 0) throw DimensionError(fmt::format("negative shape {}x{}", rows, cols));
}

CMatrix::CMatrix(int rows, int cols, std::initializer_list<cdouble> row_major) : CMatrix(rows, cols) {
  if (row_major.size() != size()) {
    throw DimensionError(fmt::format("{}x{} matrix given {} entries", rows, cols, row_major.size()));
  }
  std::copy(row_major.begin(), row_major.end(), m_.data());
}

CMatrix CMatrix::identity(int n) { return CMatrix(Storage::Identity(n, n)); }

bool CMatrix::all_finite() const noexcept {
  for (const cdouble& z : entries()) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

std::string CMatrix::shape() const { return fmt::format("{}x{}", rows(), cols()); }

CMatrix multiply(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError(fmt::format("multiply: shape mismatch {} vs {}", a.shape(), b.shape()));
  }
  return CMatrix(CMatrix::Storage(a.eigen() * b.eigen()));
}

CMatrix hermitian_transpose(const CMatrix& a) { return CMatrix(CMatrix::Storage(a.eigen().adjoint())); }

CMatrix add(const CMatrix& a, const CMatrix& b) {
  require_same_shape("add", a, b);
  return CMatrix(CMatrix::Storage(a.eigen() + b.eigen()));
}

CMatrix subtract(const CMatrix& a, const CMatrix& b) {
  require_same_shape("subtract", a, b);
  return CMatrix(CMatrix::Storage(a.eigen() - b.eigen()));
}

CMatrix scale(const CMatrix& a, cdouble s) { return CMatrix(CMatrix::Storage(a.eigen() * s)); }

double frobenius_norm_sq(const CMatrix& a) { return a.eigen().squaredNorm(); }

double frobenius_norm(const CMatrix& a) { return std::sqrt(frobenius_norm_sq(a)); }

CMatrix column(const CMatrix& a, int j) { return columns(a, j, 1); }

CMatrix columns(const CMatrix& a, int first, int count) {
  if (first < 0 || count < 0 || first + count > a.cols()) {
    throw DimensionError(fmt::format("columns [{}, {}) out of range for {}", first, first + count, a.shape()));
  }
  return CMatrix(CMatrix::Storage(a.eigen().middleCols(first, count)));
}

CMatrix solve(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw DimensionError(fmt::format("solve: shape mismatch {} vs {}", a.shape(), b.shape()));
  }
  return CMatrix(CMatrix::Storage(a.eigen().partialPivLu().solve(b.eigen())));
}

}  // namespace irsce
