// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "irsce/core/rng.hpp"
#include "irsce/nn/tensor.hpp"

namespace irsce::nn {

enum class Mode { training, inference };

// ---- stateless kernels ------------------------------------------------------
// 3x3 convolution, stride 1, zero same-padding, cross-correlation (no kernel
// flip). weight is [out][in][3][3], bias is [out].

template <typename T>
FeatureMap<T> conv2d_forward(const FeatureMap<T>& x, std::span<const T> weight,
                             std::span<const T> bias, int out_channels);

/// Accumulates into grad_weight / grad_bias; writes dx when non-null.
template <typename T>
void conv2d_backward(const FeatureMap<T>& x, std::span<const T> weight, int out_channels,
                     const FeatureMap<T>& dy, FeatureMap<T>* dx, std::span<T> grad_weight,
                     std::span<T> grad_bias);

template <typename T>
FeatureMap<T> relu_forward(const FeatureMap<T>& x);

template <typename T>
FeatureMap<T> relu_backward(const FeatureMap<T>& x, const FeatureMap<T>& dy);

// ---- layers with parameters -------------------------------------------------

template <typename T>
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<T> weight;
  std::vector<T> bias;
  std::vector<T> grad_weight;
  std::vector<T> grad_bias;

  Conv2d() = default;
  Conv2d(int in, int out);

  /// He-normal weights (std sqrt(2 / fan_in)), zero bias.
  void init_he(Rng& rng);

  /// With keep_input the input is retained for `backward`.
  FeatureMap<T> forward(FeatureMap<T> x, bool keep_input);
  /// Returns dx, or an empty map when need_dx is false.
  FeatureMap<T> backward(const FeatureMap<T>& dy, bool need_dx = true);

  int fan_in() const noexcept { return in_channels * 9; }

 private:
  FeatureMap<T> input_;
};

/// Per-channel batch normalization. Training mode normalizes with batch
/// statistics and folds them into the running estimates with `momentum`
/// weight on the old value; inference mode uses the running estimates.
template <typename T>
struct BatchNorm2d {
  static constexpr T kEpsilon = T(1e-5);
  static constexpr T kMomentum = T(0.9);

  int channels = 0;
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  std::vector<T> grad_gamma;
  std::vector<T> grad_beta;

  BatchNorm2d() = default;
  explicit BatchNorm2d(int c);

  FeatureMap<T> forward(const FeatureMap<T>& x, Mode mode, bool keep_cache);
  FeatureMap<T> backward(const FeatureMap<T>& dy);

  /// Inference-mode normalization without touching any member.
  FeatureMap<T> infer(const FeatureMap<T>& x) const;

 private:
  FeatureMap<T> normalized_;
  std::vector<T> inv_std_;
};

}  // namespace irsce::nn
