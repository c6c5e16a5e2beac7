// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx512f -mfma; only reached after a runtime CPU check.
// Double precision has no AVX-512 table and resolves to the AVX2 one.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace irsce::simd::detail {
namespace {

constexpr int kMr = 8;
constexpr int kNr = 32;

void microkernel_f32(int kc, const float* a, const float* b, float* c, int ldc, bool accumulate) {
  __m512 acc[kMr][2];
  for (int i = 0; i < kMr; ++i) {
    acc[i][0] = accumulate ? _mm512_loadu_ps(c + i * ldc) : _mm512_setzero_ps();
    acc[i][1] = accumulate ? _mm512_loadu_ps(c + i * ldc + 16) : _mm512_setzero_ps();
  }
  for (int p = 0; p < kc; ++p) {
    const __m512 b0 = _mm512_loadu_ps(b);
    const __m512 b1 = _mm512_loadu_ps(b + 16);
    for (int i = 0; i < kMr; ++i) {
      const __m512 av = _mm512_set1_ps(a[i]);
      acc[i][0] = _mm512_fmadd_ps(av, b0, acc[i][0]);
      acc[i][1] = _mm512_fmadd_ps(av, b1, acc[i][1]);
    }
    a += kMr;
    b += kNr;
  }
  for (int i = 0; i < kMr; ++i) {
    _mm512_storeu_ps(c + i * ldc, acc[i][0]);
    _mm512_storeu_ps(c + i * ldc + 16, acc[i][1]);
  }
}

void adam_update_f32(std::size_t n, float* param, const float* grad, float* m, float* v,
                     const AdamCoefficients<float>& c) {
  const __m512 b1 = _mm512_set1_ps(c.beta1);
  const __m512 b2 = _mm512_set1_ps(c.beta2);
  const __m512 one_b1 = _mm512_set1_ps(1.0f - c.beta1);
  const __m512 one_b2 = _mm512_set1_ps(1.0f - c.beta2);
  const __m512 bc1 = _mm512_set1_ps(c.bias_correction1);
  const __m512 bc2 = _mm512_set1_ps(c.bias_correction2);
  const __m512 lr = _mm512_set1_ps(c.learning_rate);
  const __m512 eps = _mm512_set1_ps(c.epsilon);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m512 g = _mm512_loadu_ps(grad + i);
    const __m512 mi = _mm512_add_ps(_mm512_mul_ps(b1, _mm512_loadu_ps(m + i)), _mm512_mul_ps(one_b1, g));
    const __m512 vi = _mm512_add_ps(_mm512_mul_ps(b2, _mm512_loadu_ps(v + i)),
                                    _mm512_mul_ps(_mm512_mul_ps(one_b2, g), g));
    _mm512_storeu_ps(m + i, mi);
    _mm512_storeu_ps(v + i, vi);
    const __m512 step = _mm512_div_ps(_mm512_mul_ps(lr, _mm512_div_ps(mi, bc1)),
                                      _mm512_add_ps(_mm512_sqrt_ps(_mm512_div_ps(vi, bc2)), eps));
    _mm512_storeu_ps(param + i, _mm512_sub_ps(_mm512_loadu_ps(param + i), step));
  }
  for (; i < n; ++i) {
    const float g = grad[i];
    m[i] = c.beta1 * m[i] + (1.0f - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0f - c.beta2) * g * g;
    param[i] -= c.learning_rate * (m[i] / c.bias_correction1) /
                (std::sqrt(v[i] / c.bias_correction2) + c.epsilon);
  }
}

void scale_shift_f32(std::size_t n, const float* x, float a, float b, float* y) {
  const __m512 av = _mm512_set1_ps(a);
  const __m512 bv = _mm512_set1_ps(b);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    _mm512_storeu_ps(y + i, _mm512_fmadd_ps(av, _mm512_loadu_ps(x + i), bv));
  }
  for (; i < n; ++i) y[i] = a * x[i] + b;
}

void relu_f32(std::size_t n, const float* x, float* y) {
  const __m512 zero = _mm512_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) _mm512_storeu_ps(y + i, _mm512_max_ps(_mm512_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward_f32(std::size_t n, const float* x, const float* dy, float* dx) {
  const __m512 zero = _mm512_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __mmask16 mask = _mm512_cmp_ps_mask(_mm512_loadu_ps(x + i), zero, _CMP_GT_OQ);
    _mm512_storeu_ps(dx + i, _mm512_maskz_mov_ps(mask, _mm512_loadu_ps(dy + i)));
  }
  for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void axpy_f32(std::size_t n, float a, const float* x, float* y) {
  const __m512 av = _mm512_set1_ps(a);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    _mm512_storeu_ps(y + i, _mm512_fmadd_ps(av, _mm512_loadu_ps(x + i), _mm512_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

float dot_f32(std::size_t n, const float* x, const float* y) {
  __m512 acc = _mm512_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) acc = _mm512_fmadd_ps(_mm512_loadu_ps(x + i), _mm512_loadu_ps(y + i), acc);
  alignas(64) float lanes[16];
  _mm512_store_ps(lanes, acc);
  float sum = 0.0f;
  for (const float l : lanes) sum += l;
  for (; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

}  // namespace

const KernelTable<float> kAvx512F32{.level = Level::avx512,
                                    .mr = kMr,
                                    .nr = kNr,
                                    .microkernel = &microkernel_f32,
                                    .adam_update = &adam_update_f32,
                                    .scale_shift = &scale_shift_f32,
                                    .relu = &relu_f32,
                                    .relu_backward = &relu_backward_f32,
                                    .axpy = &axpy_f32,
                                    .dot = &dot_f32};

}  // namespace irsce::simd::detail
