// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace irsce {

/// Seeded random stream. Single owner: give each worker its own stream via
/// `Rng::derived(base, index)`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for worker/task `index` of a run seeded with `base_seed`.
  static Rng derived(std::uint64_t base_seed, std::uint64_t index) { return Rng(base_seed + index); }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Circularly-symmetric CN(0, 1): real and imaginary parts N(0, 1/2).
  std::complex<double> complex_normal() {
    constexpr double kHalfStd = 0.70710678118654752440;
    const double re = normal_(engine_) * kHalfStd;
    const double im = normal_(engine_) * kHalfStd;
    return {re, im};
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace irsce
