// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "irsce/simd/kernels.hpp"

namespace irsce::simd {

enum class Trans { no, yes };

/// Row-major C = op(A) * op(B) + beta * C, with op(A) m x k and op(B) k x n.
/// Blocked and packed; the per-element accumulation order depends only on k,
/// so results do not change with where a row or column sits in C.
template <typename T>
void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, const T* a, int lda, const T* b,
          int ldb, T beta, T* c, int ldc, const KernelTable<T>& table);

template <typename T>
void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, const T* a, int lda, const T* b,
          int ldb, T beta, T* c, int ldc) {
  gemm(trans_a, trans_b, m, n, k, a, lda, b, ldb, beta, c, ldc, active_kernels<T>());
}

}  // namespace irsce::simd
