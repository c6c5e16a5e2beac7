// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/simd/gemm.hpp"

#include <algorithm>
#include <vector>

namespace irsce::simd {
namespace {

constexpr int kKc = 256;
constexpr int kMc = 96;    // multiple of every tier's mr (4, 6, 8)
constexpr int kNc = 4096;  // multiple of every tier's nr (8, 16, 32)

template <typename T>
struct PackBuffers {
  std::vector<T> a;
  std::vector<T> b;
  std::vector<T> tile;
};

template <typename T>
PackBuffers<T>& buffers() {
  thread_local PackBuffers<T> bufs;
  return bufs;
}

// Packs op(A)[i0:i0+mc, p0:p0+kc] into mr-row slivers, zero-padding the tail.
template <typename T>
void pack_a(Trans trans, const T* a, int lda, int i0, int mc, int p0, int kc, int mr, T* out) {
  for (int is = 0; is < mc; is += mr) {
    const int rows = std::min(mr, mc - is);
    for (int p = 0; p < kc; ++p) {
      for (int i = 0; i < mr; ++i) {
        T value = T(0);
        if (i < rows) {
          const int row = i0 + is + i;
          const int col = p0 + p;
          value = trans == Trans::no ? a[static_cast<long>(row) * lda + col]
                                     : a[static_cast<long>(col) * lda + row];
        }
        *out++ = value;
      }
    }
  }
}

// Packs op(B)[p0:p0+kc, j0:j0+nc] into nr-column slivers, zero-padding the tail.
template <typename T>
void pack_b(Trans trans, const T* b, int ldb, int p0, int kc, int j0, int nc, int nr, T* out) {
  for (int js = 0; js < nc; js += nr) {
    const int cols = std::min(nr, nc - js);
    if (trans == Trans::yes && cols == nr) {
      for (int j = 0; j < nr; ++j) {
        const T* src = b + static_cast<long>(j0 + js + j) * ldb + p0;
        for (int p = 0; p < kc; ++p) out[p * nr + j] = src[p];
      }
      out += static_cast<long>(kc) * nr;
      continue;
    }
    for (int p = 0; p < kc; ++p) {
      const int row = p0 + p;
      if (trans == Trans::no && cols == nr) {
        const T* src = b + static_cast<long>(row) * ldb + j0 + js;
        std::copy(src, src + nr, out);
        out += nr;
        continue;
      }
      for (int j = 0; j < nr; ++j) {
        T value = T(0);
        if (j < cols) {
          const int col = j0 + js + j;
          value = trans == Trans::no ? b[static_cast<long>(row) * ldb + col]
                                     : b[static_cast<long>(col) * ldb + row];
        }
        *out++ = value;
      }
    }
  }
}

}  // namespace

template <typename T>
void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, const T* a, int lda, const T* b,
          int ldb, T beta, T* c, int ldc, const KernelTable<T>& table) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0 || (beta != T(0) && beta != T(1))) {
    for (int i = 0; i < m; ++i) {
      T* row = c + static_cast<long>(i) * ldc;
      for (int j = 0; j < n; ++j) row[j] = beta == T(0) ? T(0) : row[j] * beta;
    }
    if (k <= 0) return;
    beta = T(1);
  }

  const int mr = table.mr;
  const int nr = table.nr;
  auto& bufs = buffers<T>();
  bufs.a.resize(static_cast<std::size_t>(kMc) * kKc);
  bufs.b.resize(static_cast<std::size_t>(kNc) * kKc);
  bufs.tile.resize(static_cast<std::size_t>(mr) * nr);
  T* tile = bufs.tile.data();

  for (int j0 = 0; j0 < n; j0 += kNc) {
    const int nc = std::min(kNc, n - j0);
    for (int p0 = 0; p0 < k; p0 += kKc) {
      const int kc = std::min(kKc, k - p0);
      const bool accumulate = p0 > 0 || beta == T(1);
      pack_b(trans_b, b, ldb, p0, kc, j0, nc, nr, bufs.b.data());
      for (int i0 = 0; i0 < m; i0 += kMc) {
        const int mc = std::min(kMc, m - i0);
        pack_a(trans_a, a, lda, i0, mc, p0, kc, mr, bufs.a.data());
        for (int js = 0; js < nc; js += nr) {
          const int cols = std::min(nr, nc - js);
          const T* bp = bufs.b.data() + static_cast<long>(js / nr) * kc * nr;
          for (int is = 0; is < mc; is += mr) {
            const int rows = std::min(mr, mc - is);
            const T* ap = bufs.a.data() + static_cast<long>(is / mr) * kc * mr;
            T* ct = c + static_cast<long>(i0 + is) * ldc + j0 + js;
            if (rows == mr && cols == nr) {
              table.microkernel(kc, ap, bp, ct, ldc, accumulate);
              continue;
            }
            std::fill(tile, tile + mr * nr, T(0));
            if (accumulate) {
              for (int i = 0; i < rows; ++i) {
                std::copy(ct + static_cast<long>(i) * ldc, ct + static_cast<long>(i) * ldc + cols,
                          tile + i * nr);
              }
            }
            table.microkernel(kc, ap, bp, tile, nr, true);
            for (int i = 0; i < rows; ++i) {
              std::copy(tile + i * nr, tile + i * nr + cols, ct + static_cast<long>(i) * ldc);
            }
          }
        }
      }
    }
  }
}

template void gemm<float>(Trans, Trans, int, int, int, const float*, int, const float*, int, float,
                          float*, int, const KernelTable<float>&);
template void gemm<double>(Trans, Trans, int, int, int, const double*, int, const double*, int,
                           double, double*, int, const KernelTable<double>&);

}  // namespace irsce::simd
