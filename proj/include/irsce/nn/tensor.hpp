// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace irsce::nn {

// Leaves elements default-initialized so scratch outputs skip the zero fill.
template <typename T>
struct DefaultInitAllocator : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  using std::allocator<T>::allocator;
  template <typename U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

/// Dense (batch, channels, height, width) tensor, row-major.
template <typename T>
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int batch, int channels, int height, int width)
      : n_(batch), c_(channels), h_(height), w_(width),
        values_(static_cast<std::size_t>(batch) * channels * height * width, T(0)) {}

  /// Same shape as the constructor, contents unspecified.
  static Tensor4 uninitialized(int batch, int channels, int height, int width) {
    Tensor4 t;
    t.n_ = batch;
    t.c_ = channels;
    t.h_ = height;
    t.w_ = width;
    t.values_.resize(static_cast<std::size_t>(batch) * channels * height * width);
    return t;
  }

  int batch() const noexcept { return n_; }
  int channels() const noexcept { return c_; }
  int height() const noexcept { return h_; }
  int width() const noexcept { return w_; }
  int plane_size() const noexcept { return h_ * w_; }
  std::size_t size() const noexcept { return values_.size(); }

  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  T& at(int n, int c, int y, int x) { return values_[index(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const { return values_[index(n, c, y, x)]; }

  /// The height x width plane of sample n, channel c.
  T* plane(int n, int c) noexcept { return values_.data() + index(n, c, 0, 0); }
  const T* plane(int n, int c) const noexcept { return values_.data() + index(n, c, 0, 0); }

  bool same_shape(const Tensor4& o) const noexcept {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  bool all_finite() const noexcept {
    for (const T& v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string shape() const { return fmt::format("({}, {}, {}, {})", n_, c_, h_, w_); }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

 private:
  std::size_t index(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x;
  }

  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<T, DefaultInitAllocator<T>> values_;
};

/// Channel-major activations used inside the engine: channel c holds the
/// batch * height * width values of every sample back to back.
template <typename T>
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int batch, int height, int width)
      : c_(channels), n_(batch), h_(height), w_(width),
        values_(static_cast<std::size_t>(channels) * batch * height * width, T(0)) {}

  static FeatureMap uninitialized(int channels, int batch, int height, int width) {
    FeatureMap f;
    f.c_ = channels;
    f.n_ = batch;
    f.h_ = height;
    f.w_ = width;
    f.values_.resize(static_cast<std::size_t>(channels) * batch * height * width);
    return f;
  }

  int channels() const noexcept { return c_; }
  int batch() const noexcept { return n_; }
  int height() const noexcept { return h_; }
  int width() const noexcept { return w_; }
  int plane_size() const noexcept { return h_ * w_; }
  /// Values per channel.
  int pixels() const noexcept { return n_ * h_ * w_; }
  std::size_t size() const noexcept { return values_.size(); }

  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  T* channel(int c) noexcept { return values_.data() + static_cast<std::size_t>(c) * pixels(); }
  const T* channel(int c) const noexcept {
    return values_.data() + static_cast<std::size_t>(c) * pixels();
  }

  bool same_shape(const FeatureMap& o) const noexcept {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  bool all_finite() const noexcept {
    for (const T& v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string shape() const {
    return fmt::format("(batch {}, channels {}, {}, {})", n_, c_, h_, w_);
  }

 private:
  int c_ = 0, n_ = 0, h_ = 0, w_ = 0;
  std::vector<T, DefaultInitAllocator<T>> values_;
};

template <typename T>
FeatureMap<T> to_feature_map(const Tensor4<T>& x) {
  auto f = FeatureMap<T>::uninitialized(x.channels(), x.batch(), x.height(), x.width());
  const int hw = x.plane_size();
  for (int c = 0; c < x.channels(); ++c) {
    for (int b = 0; b < x.batch(); ++b) {
      std::copy(x.plane(b, c), x.plane(b, c) + hw, f.channel(c) + static_cast<std::size_t>(b) * hw);
    }
  }
  return f;
}

template <typename T>
Tensor4<T> to_tensor(const FeatureMap<T>& f) {
  auto x = Tensor4<T>::uninitialized(f.batch(), f.channels(), f.height(), f.width());
  const int hw = f.plane_size();
  for (int c = 0; c < f.channels(); ++c) {
    for (int b = 0; b < f.batch(); ++b) {
      const T* src = f.channel(c) + static_cast<std::size_t>(b) * hw;
      std::copy(src, src + hw, x.plane(b, c));
    }
  }
  return x;
}

}  // namespace irsce::nn
