// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace irsce {

/// Scalar system parameters shared by every stage of the pipeline.
struct SystemConfig {
  int num_users = 0;         // K
  int num_bs_antennas = 0;   // M
  int num_irs_elements = 0;  // N
  int pilot_length = 0;      // L, L >= K
  int num_subframes = 0;     // C, always N + 1
  double symbol_power = 1.0;    // P_t (W)
  double noise_variance = 1.0;  // sigma^2 (W)
  double pilot_snr_db = 0.0;    // 10 log10(P_t / sigma^2)
  double coherence_correlation = 0.0;  // rho in [0, 1]
  std::uint64_t rng_seed = 0;

  /// Columns of H_k: the direct path plus one cascaded column per element.
  int channel_cols() const noexcept { return num_irs_elements + 1; }

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
};

/// Builds a config with P_t = 1 and sigma^2 = 10^(-snr_db/10).
SystemConfig config_from_snr(int num_users, int num_bs_antennas, int num_irs_elements,
                             int pilot_length, double snr_db, double correlation,
                             std::uint64_t seed);

/// Same system with the noise variance moved to a new pilot SNR.
SystemConfig with_snr(const SystemConfig& cfg, double snr_db);

double db_to_linear(double db) noexcept;
double linear_to_db(double linear) noexcept;

}  // namespace irsce
