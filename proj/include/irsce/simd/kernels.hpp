// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "irsce/simd/cpu.hpp"

namespace irsce::simd {

template <typename T>
struct AdamCoefficients {
  T learning_rate;
  T beta1;
  T beta2;
  T epsilon;
  T bias_correction1;  // 1 - beta1^t
  T bias_correction2;  // 1 - beta2^t
};

// Inner loops of the NN engine. Every tier computes the same function; tiers
// differ only in rounding (FMA contraction, lane order inside the microkernel).
template <typename T>
struct KernelTable {
  Level level;
  int mr;  // microkernel tile rows
  int nr;  // microkernel tile cols

  // c[i*ldc + j] = (accumulate ? c[i*ldc + j] : 0) + sum_k a[k*mr + i] * b[k*nr + j]
  // over a full mr x nr tile; k runs in order, so each element sees the same
  // sequence of operations wherever the tile sits.
  void (*microkernel)(int kc, const T* a, const T* b, T* c, int ldc, bool accumulate);

  void (*adam_update)(std::size_t n, T* param, const T* grad, T* m, T* v,
                      const AdamCoefficients<T>& c);

  // y = a*x + b
  void (*scale_shift)(std::size_t n, const T* x, T a, T b, T* y);

  void (*relu)(std::size_t n, const T* x, T* y);

  // dx = x > 0 ? dy : 0
  void (*relu_backward)(std::size_t n, const T* x, const T* dy, T* dx);

  // y += a*x
  void (*axpy)(std::size_t n, T a, const T* x, T* y);

  // sum x*y, lanes reduced in a fixed order
  T (*dot)(std::size_t n, const T* x, const T* y);
};

/// Table for a specific tier. Tiers the build or CPU lacks fall back to the
/// next lower one, so the returned table's `level` may be below `level`.
template <typename T>
const KernelTable<T>& kernels(Level level) noexcept;

template <typename T>
const KernelTable<T>& active_kernels() noexcept {
  return kernels<T>(active_level());
}

}  // namespace irsce::simd
