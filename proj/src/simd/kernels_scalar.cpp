// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "kernels_impl.hpp"

namespace irsce::simd::detail {
namespace {

constexpr int kMr = 4;
constexpr int kNr = 8;

template <typename T>
void microkernel(int kc, const T* a, const T* b, T* c, int ldc, bool accumulate) {
  T acc[kMr][kNr] = {};
  if (accumulate) {
    for (int i = 0; i < kMr; ++i) {
      for (int j = 0; j < kNr; ++j) acc[i][j] = c[i * ldc + j];
    }
  }
  for (int p = 0; p < kc; ++p) {
    const T* ap = a + p * kMr;
    const T* bp = b + p * kNr;
    for (int i = 0; i < kMr; ++i) {
      for (int j = 0; j < kNr; ++j) {
        acc[i][j] += ap[i] * bp[j];
      }
    }
  }
  for (int i = 0; i < kMr; ++i) {
    for (int j = 0; j < kNr; ++j) {
      c[i * ldc + j] = acc[i][j];
    }
  }
}

template <typename T>
void adam_update(std::size_t n, T* param, const T* grad, T* m, T* v, const AdamCoefficients<T>& c) {
  const T one = T(1);
  for (std::size_t i = 0; i < n; ++i) {
    const T g = grad[i];
    m[i] = c.beta1 * m[i] + (one - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (one - c.beta2) * g * g;
    const T m_hat = m[i] / c.bias_correction1;
    const T v_hat = v[i] / c.bias_correction2;
    param[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

template <typename T>
void scale_shift(std::size_t n, const T* x, T a, T b, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}

template <typename T>
void relu(std::size_t n, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(std::size_t n, const T* x, const T* dy, T* dx) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
  T sum = T(0);
  for (std::size_t i = 0; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

template <typename T>
constexpr KernelTable<T> scalar_table() {
  return {.level = Level::scalar,
          .mr = kMr,
          .nr = kNr,
          .microkernel = &microkernel<T>,
          .adam_update = &adam_update<T>,
          .scale_shift = &scale_shift<T>,
          .relu = &relu<T>,
          .relu_backward = &relu_backward<T>,
          .axpy = &axpy<T>,
          .dot = &dot<T>};
}

}  // namespace

const KernelTable<float> kScalarF32 = scalar_table<float>();
const KernelTable<double> kScalarF64 = scalar_table<double>();

}  // namespace irsce::simd::detail
