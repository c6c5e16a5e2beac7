// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irsce/core/rng.hpp"
#include "irsce/nn/layers.hpp"

namespace irsce::nn {

/// Stack of three sequential blocks. Each block is
///   conv(2 -> width) + BN + ReLU,
///   (4 * middle_repeats) x [conv(width -> width) + BN + ReLU],
///   conv(width -> 2),
/// all 3x3 with same padding. With `residual_skip` a block adds its input to
/// its output. middle_repeats = 1 is the shallow estimator; the DRN-style
/// denoiser repeats the middle group D > 1 times.
struct ModelArchitecture {
  static constexpr int kBlocks = 3;
  static constexpr int kMiddlePerGroup = 4;
  static constexpr int kIoChannels = 2;

  int middle_repeats = 1;
  bool residual_skip = false;
  int width = 64;

  int middle_layers_per_block() const noexcept { return kMiddlePerGroup * middle_repeats; }
  int layers_per_block() const noexcept { return middle_layers_per_block() + 2; }
  int num_layers() const noexcept { return kBlocks * layers_per_block(); }

  void validate() const;
  friend bool operator==(const ModelArchitecture&, const ModelArchitecture&) = default;
};

/// One conv layer with its optional BN + ReLU tail.
template <typename T>
struct ConvUnit {
  Conv2d<T> conv;
  std::optional<BatchNorm2d<T>> norm;  // absent on block output layers
  FeatureMap<T> pre_activation;        // BN output kept for the ReLU backward
};

/// Non-owning view of one trainable array and its gradient / Adam moments.
template <typename T>
struct ParamView {
  std::string name;
  std::span<T> value;
  std::span<T> grad;
  std::span<T> first_moment;
  std::span<T> second_moment;
};

template <typename T>
class Model {
 public:
  Model() = default;
  explicit Model(const ModelArchitecture& arch);

  /// He-normal conv weights, zero biases, gamma = 1, beta = 0.
  void initialize(Rng& rng);

  const ModelArchitecture& architecture() const noexcept { return arch_; }

  /// Input (batch, 2, H, W) -> output (batch, 2, H, W). Training mode keeps
  /// the activations needed by `backward` and updates BN running statistics.
  Tensor4<T> forward(const Tensor4<T>& x, Mode mode);

  /// Inference-mode forward that leaves the model untouched; safe to call
  /// concurrently on a shared model.
  Tensor4<T> infer(const Tensor4<T>& x) const;

  /// Gradient of the loss w.r.t. the last training-mode forward input.
  /// Parameter gradients accumulate; call `zero_grad` between steps.
  Tensor4<T> backward(const Tensor4<T>& d_output);

  void zero_grad();

  std::vector<ParamView<T>> parameters();

  /// Trainable scalars: conv weights and biases plus BN gamma and beta.
  std::size_t parameter_count() const;

  std::vector<ConvUnit<T>>& units() noexcept { return units_; }
  const std::vector<ConvUnit<T>>& units() const noexcept { return units_; }

  std::uint64_t step() const noexcept { return step_; }
  void set_step(std::uint64_t s) noexcept { step_ = s; }

 private:
  ModelArchitecture arch_;
  std::vector<ConvUnit<T>> units_;
  std::vector<std::vector<T>> first_moments_;
  std::vector<std::vector<T>> second_moments_;
  std::uint64_t step_ = 0;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update over every parameter of `model` using the
/// accumulated gradients. Throws NumericalError naming the first array with a
/// non-finite gradient, before any parameter is touched.
template <typename T>
void adam_step(Model<T>& model, const AdamConfig& cfg);

}  // namespace irsce::nn
