// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/nn/layers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "irsce/core/error.hpp"
#include "irsce/simd/gemm.hpp"

namespace irsce::nn {
namespace {

template <typename T>
std::vector<T, DefaultInitAllocator<T>>& scratch(int slot) {
  thread_local std::vector<T, DefaultInitAllocator<T>> buffers[3];
  return buffers[slot];
}

// Outputs with at most this many channels skip the GEMM and accumulate
// shifted rows directly; packing a 10 MB panel for two output rows costs more
// than the arithmetic.
constexpr int kDirectMaxRows = 4;

// For each 3x3 tap: the flat shift within a channel and the in-plane pixels
// whose shifted source falls outside the plane.
struct TapPlan {
  int offset[9];
  std::vector<int> outside[9];

  TapPlan(int h, int w) {
    for (int t = 0; t < 9; ++t) {
      const int dy = t / 3 - 1, dx = t % 3 - 1;
      offset[t] = dy * w + dx;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (y + dy < 0 || y + dy >= h || x + dx < 0 || x + dx >= w) outside[t].push_back(y * w + x);
        }
      }
    }
  }
};

// rows[t][p] = src shifted by tap t, 0 where the shifted pixel leaves its
// sample's plane. src and each row hold npix = batch * hw values.
template <typename T>
void shifted_rows(const TapPlan& plan, const T* src, int npix, int hw, T* rows) {
  for (int t = 0; t < 9; ++t) {
    const int offset = plan.offset[t];
    T* dst = rows + static_cast<std::size_t>(t) * npix;
    const int lo = std::min(npix, std::max(0, -offset));
    const int hi = std::max(lo, std::min(npix, npix - offset));
    std::fill(dst, dst + lo, T(0));
    std::copy(src + lo + offset, src + hi + offset, dst + lo);
    std::fill(dst + hi, dst + npix, T(0));
    for (int base = 0; base < npix; base += hw) {
      for (const int i : plan.outside[t]) dst[base + i] = T(0);
    }
  }
}

// col[(ci*9 + t)][p - p0] for pixels [p0, p0 + n) of every input channel;
// p0 and n cover whole samples.
template <typename T>
void im2col(const TapPlan& plan, const FeatureMap<T>& x, int p0, int n, T* col) {
  for (int ci = 0; ci < x.channels(); ++ci) {
    shifted_rows(plan, x.channel(ci) + p0, n, x.plane_size(), col + static_cast<std::size_t>(ci) * 9 * n);
  }
}

// Pixel chunks of whole samples, sized so one chunk's column panel stays in
// cache; calls f(p0, n).
template <typename F>
void for_each_chunk(int batch, int hw, F&& f) {
  constexpr int kChunkPixels = 512;
  const int samples = std::max(1, kChunkPixels / hw);
  for (int b = 0; b < batch; b += samples) f(b * hw, std::min(samples, batch - b) * hw);
}

// y[co] += sum_{ci,t} w[co][ci][t] * shift_t(x[ci]), w laid out [out][in][9].
template <typename T>
void direct_conv(const FeatureMap<T>& x, const T* w, int out_channels, FeatureMap<T>& y) {
  const TapPlan plan(x.height(), x.width());
  const int npix = x.pixels();
  const int cin = x.channels();
  const auto& k = simd::active_kernels<T>();
  auto& rows = scratch<T>(0);
  rows.resize(static_cast<std::size_t>(9) * npix);
  for (int ci = 0; ci < cin; ++ci) {
    shifted_rows(plan, x.channel(ci), npix, x.plane_size(), rows.data());
    for (int co = 0; co < out_channels; ++co) {
      const T* wk = w + (static_cast<std::size_t>(co) * cin + ci) * 9;
      for (int t = 0; t < 9; ++t) k.axpy(npix, wk[t], rows.data() + static_cast<std::size_t>(t) * npix, y.channel(co));
    }
  }
}

template <typename T>
void check_conv_shapes(const FeatureMap<T>& x, std::size_t weight_size, int out_channels) {
  const std::size_t expected = static_cast<std::size_t>(out_channels) * x.channels() * 9;
  if (weight_size != expected) {
    throw DimensionError(fmt::format(
        "conv2d: input {} has {} channels but weights hold {} values for {} filters (need {})",
        x.shape(), x.channels(), weight_size, out_channels, expected));
  }
}

}  // namespace

template <typename T>
FeatureMap<T> conv2d_forward(const FeatureMap<T>& x, std::span<const T> weight,
                             std::span<const T> bias, int out_channels) {
  check_conv_shapes(x, weight.size(), out_channels);
  if (bias.size() != static_cast<std::size_t>(out_channels)) {
    throw DimensionError(fmt::format("conv2d: bias length {} vs {} filters", bias.size(), out_channels));
  }
  const int npix = x.pixels();
  const int k = x.channels() * 9;
  auto y = FeatureMap<T>::uninitialized(out_channels, x.batch(), x.height(), x.width());
  for (int co = 0; co < out_channels; ++co) std::fill(y.channel(co), y.channel(co) + npix, bias[co]);
  if (out_channels <= kDirectMaxRows) {
    direct_conv(x, weight.data(), out_channels, y);
    return y;
  }
  const TapPlan plan(x.height(), x.width());
  auto& col = scratch<T>(0);
  for_each_chunk(x.batch(), x.plane_size(), [&](int p0, int n) {
    col.resize(static_cast<std::size_t>(k) * n);
    im2col(plan, x, p0, n, col.data());
    simd::gemm<T>(simd::Trans::no, simd::Trans::no, out_channels, n, k, weight.data(), k,
                  col.data(), n, T(1), y.data() + p0, npix);
  });
  return y;
}

template <typename T>
void conv2d_backward(const FeatureMap<T>& x, std::span<const T> weight, int out_channels,
                     const FeatureMap<T>& dy, FeatureMap<T>* dx, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  check_conv_shapes(x, weight.size(), out_channels);
  if (dy.batch() != x.batch() || dy.channels() != out_channels || dy.height() != x.height() ||
      dy.width() != x.width()) {
    throw DimensionError(fmt::format("conv2d backward: upstream {} vs input {}", dy.shape(), x.shape()));
  }
  const int cin = x.channels();
  const int npix = x.pixels();
  const int k = cin * 9;

  for (int co = 0; co < out_channels; ++co) {
    const T* g = dy.channel(co);
    T sum = T(0);
    for (int i = 0; i < npix; ++i) sum += g[i];
    grad_bias[co] += sum;
  }

  if (out_channels <= kDirectMaxRows) {
    const TapPlan plan(x.height(), x.width());
    const auto& kt = simd::active_kernels<T>();
    auto& rows = scratch<T>(0);
    rows.resize(static_cast<std::size_t>(9) * npix);
    for (int ci = 0; ci < cin; ++ci) {
      shifted_rows(plan, x.channel(ci), npix, x.plane_size(), rows.data());
      for (int co = 0; co < out_channels; ++co) {
        T* gw = grad_weight.data() + (static_cast<std::size_t>(co) * cin + ci) * 9;
        for (int t = 0; t < 9; ++t) gw[t] += kt.dot(npix, dy.channel(co), rows.data() + static_cast<std::size_t>(t) * npix);
      }
    }
  } else {
    const TapPlan plan(x.height(), x.width());
    auto& col = scratch<T>(0);
    for_each_chunk(x.batch(), x.plane_size(), [&](int p0, int n) {
      col.resize(static_cast<std::size_t>(k) * n);
      im2col(plan, x, p0, n, col.data());
      simd::gemm<T>(simd::Trans::no, simd::Trans::yes, out_channels, k, n, dy.data() + p0, npix,
                    col.data(), n, T(1), grad_weight.data(), k);
    });
  }

  if (dx == nullptr) return;
  // dx is dy convolved with the transposed, spatially flipped filters.
  const int kt = out_channels * 9;
  auto& flipped = scratch<T>(1);
  flipped.resize(static_cast<std::size_t>(cin) * kt);
  for (int co = 0; co < out_channels; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      for (int t = 0; t < 9; ++t) {
        flipped[static_cast<std::size_t>(ci) * kt + co * 9 + (8 - t)] =
            weight[(static_cast<std::size_t>(co) * cin + ci) * 9 + t];
      }
    }
  }
  if (cin <= kDirectMaxRows) {
    *dx = FeatureMap<T>(cin, x.batch(), x.height(), x.width());
    direct_conv(dy, flipped.data(), cin, *dx);
    return;
  }
  const TapPlan plan(x.height(), x.width());
  auto& dcol = scratch<T>(2);
  *dx = FeatureMap<T>::uninitialized(cin, x.batch(), x.height(), x.width());
  for_each_chunk(x.batch(), x.plane_size(), [&](int p0, int n) {
    dcol.resize(static_cast<std::size_t>(kt) * n);
    im2col(plan, dy, p0, n, dcol.data());
    simd::gemm<T>(simd::Trans::no, simd::Trans::no, cin, n, kt, flipped.data(), kt, dcol.data(), n,
                  T(0), dx->data() + p0, npix);
  });
}

template <typename T>
FeatureMap<T> relu_forward(const FeatureMap<T>& x) {
  auto y = FeatureMap<T>::uninitialized(x.channels(), x.batch(), x.height(), x.width());
  simd::active_kernels<T>().relu(x.size(), x.data(), y.data());
  return y;
}

template <typename T>
FeatureMap<T> relu_backward(const FeatureMap<T>& x, const FeatureMap<T>& dy) {
  if (!x.same_shape(dy)) {
    throw DimensionError(fmt::format("relu backward: input {} vs upstream {}", x.shape(), dy.shape()));
  }
  auto dx = FeatureMap<T>::uninitialized(x.channels(), x.batch(), x.height(), x.width());
  simd::active_kernels<T>().relu_backward(x.size(), x.data(), dy.data(), dx.data());
  return dx;
}

// ---- Conv2d -----------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(int in, int out)
    : in_channels(in),
      out_channels(out),
      weight(static_cast<std::size_t>(in) * out * 9, T(0)),
      bias(static_cast<std::size_t>(out), T(0)),
      grad_weight(weight.size(), T(0)),
      grad_bias(bias.size(), T(0)) {}

template <typename T>
void Conv2d<T>::init_he(Rng& rng) {
  const double stddev = std::sqrt(2.0 / fan_in());
  for (T& v : weight) v = static_cast<T>(rng.normal() * stddev);
  std::fill(bias.begin(), bias.end(), T(0));
}

template <typename T>
FeatureMap<T> Conv2d<T>::forward(FeatureMap<T> x, bool keep_input) {
  if (x.channels() != in_channels) {
    throw DimensionError(fmt::format("conv2d: input {} has {} channels, layer expects {}", x.shape(),
                                     x.channels(), in_channels));
  }
  FeatureMap<T> y = conv2d_forward<T>(x, weight, bias, out_channels);
  if (keep_input) input_ = std::move(x);
  return y;
}

template <typename T>
FeatureMap<T> Conv2d<T>::backward(const FeatureMap<T>& dy, bool need_dx) {
  FeatureMap<T> dx;
  conv2d_backward<T>(input_, weight, out_channels, dy, need_dx ? &dx : nullptr, grad_weight,
                     grad_bias);
  return dx;
}

// ---- BatchNorm2d ------------------------------------------------------------

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int c)
    : channels(c),
      gamma(c, T(1)),
      beta(c, T(0)),
      running_mean(c, T(0)),
      running_var(c, T(1)),
      grad_gamma(c, T(0)),
      grad_beta(c, T(0)) {}

template <typename T>
FeatureMap<T> BatchNorm2d<T>::forward(const FeatureMap<T>& x, Mode mode, bool keep_cache) {
  if (x.channels() != channels) {
    throw DimensionError(fmt::format("batchnorm: input {} vs {} channels", x.shape(), channels));
  }
  const int n = x.pixels();
  const auto& k = simd::active_kernels<T>();
  auto y = FeatureMap<T>::uninitialized(channels, x.batch(), x.height(), x.width());
  if (keep_cache) {
    normalized_ = FeatureMap<T>::uninitialized(channels, x.batch(), x.height(), x.width());
    inv_std_.assign(channels, T(0));
  }

  for (int c = 0; c < channels; ++c) {
    const T* p = x.channel(c);
    T mean, var;
    if (mode == Mode::training) {
      if (n < 2) throw ValidationError("batchnorm: training mode needs batch*height*width >= 2");
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += p[i];
      const double mu = sum / n;
      double sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = p[i] - mu;
        sq += d * d;
      }
      mean = static_cast<T>(mu);
      var = static_cast<T>(sq / n);
      running_mean[c] = kMomentum * running_mean[c] + (T(1) - kMomentum) * mean;
      running_var[c] =
          kMomentum * running_var[c] + (T(1) - kMomentum) * static_cast<T>(sq / (n - 1.0));
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const T inv_std = T(1) / std::sqrt(var + kEpsilon);
    const T a = gamma[c] * inv_std;
    k.scale_shift(n, p, a, beta[c] - a * mean, y.channel(c));
    if (keep_cache) {
      k.scale_shift(n, p, inv_std, -mean * inv_std, normalized_.channel(c));
      inv_std_[c] = inv_std;
    }
  }
  return y;
}

template <typename T>
FeatureMap<T> BatchNorm2d<T>::backward(const FeatureMap<T>& dy) {
  if (!dy.same_shape(normalized_)) {
    throw DimensionError(fmt::format("batchnorm backward: upstream {} vs cached {}", dy.shape(),
                                     normalized_.shape()));
  }
  const int n = dy.pixels();
  const T count = static_cast<T>(n);
  auto dx = FeatureMap<T>::uninitialized(channels, dy.batch(), dy.height(), dy.width());
  for (int c = 0; c < channels; ++c) {
    const T* g = dy.channel(c);
    const T* xh = normalized_.channel(c);
    T sum_dy = T(0), sum_dy_xhat = T(0);
    for (int i = 0; i < n; ++i) {
      sum_dy += g[i];
      sum_dy_xhat += g[i] * xh[i];
    }
    grad_gamma[c] += sum_dy_xhat;
    grad_beta[c] += sum_dy;
    const T scale = gamma[c] * inv_std_[c] / count;
    T* d = dx.channel(c);
    for (int i = 0; i < n; ++i) d[i] = scale * (count * g[i] - sum_dy - xh[i] * sum_dy_xhat);
  }
  return dx;
}

template <typename T>
FeatureMap<T> BatchNorm2d<T>::infer(const FeatureMap<T>& x) const {
  if (x.channels() != channels) {
    throw DimensionError(fmt::format("batchnorm: input {} vs {} channels", x.shape(), channels));
  }
  const auto& k = simd::active_kernels<T>();
  auto y = FeatureMap<T>::uninitialized(channels, x.batch(), x.height(), x.width());
  for (int c = 0; c < channels; ++c) {
    const T inv_std = T(1) / std::sqrt(running_var[c] + kEpsilon);
    const T a = gamma[c] * inv_std;
    k.scale_shift(x.pixels(), x.channel(c), a, beta[c] - a * running_mean[c], y.channel(c));
  }
  return y;
}

#define IRSCE_INSTANTIATE(T)                                                                      \
  template FeatureMap<T> conv2d_forward<T>(const FeatureMap<T>&, std::span<const T>,             \
                                           std::span<const T>, int);                             \
  template void conv2d_backward<T>(const FeatureMap<T>&, std::span<const T>, int,                 \
                                   const FeatureMap<T>&, FeatureMap<T>*, std::span<T>,            \
                                   std::span<T>);                                                 \
  template FeatureMap<T> relu_forward<T>(const FeatureMap<T>&);                                   \
  template FeatureMap<T> relu_backward<T>(const FeatureMap<T>&, const FeatureMap<T>&);            \
  template struct Conv2d<T>;                                                                      \
  template struct BatchNorm2d<T>;

IRSCE_INSTANTIATE(float)
IRSCE_INSTANTIATE(double)
#undef IRSCE_INSTANTIATE

}  // namespace irsce::nn
