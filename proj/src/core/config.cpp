// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/core/config.hpp"

#include <fmt/format.h>

#include <cmath>

#include "irsce/core/error.hpp"

namespace irsce {

double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) noexcept { return 10.0 * std::log10(linear); }

void SystemConfig::validate() const {
  if (num_users < 1 || num_bs_antennas < 1 || num_irs_elements < 1 || pilot_length < 1) {
    throw ValidationError(fmt::format("system sizes must be >= 1 (K={}, M={}, N={}, L={})", num_users,
                                      num_bs_antennas, num_irs_elements, pilot_length));
  }
  if (pilot_length < num_users) {
    throw ValidationError(fmt::format(
        "pilot rank: pilot length L={} cannot carry K={} orthogonal pilots", pilot_length, num_users));
  }
  if (num_subframes != num_irs_elements + 1) {
    throw ValidationError(
        fmt::format("C must equal N+1 (C={}, N={})", num_subframes, num_irs_elements));
  }
  if (!(symbol_power > 0.0) || !std::isfinite(symbol_power)) {
    throw ValidationError(fmt::format("symbol power must be positive and finite, got {}", symbol_power));
  }
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw ValidationError(fmt::format("noise variance must be positive and finite, got {}", noise_variance));
  }
  if (!(coherence_correlation >= 0.0 && coherence_correlation <= 1.0)) {
    throw ValidationError(fmt::format("coherence correlation must lie in [0,1], got {}", coherence_correlation));
  }
  const double implied = linear_to_db(symbol_power / noise_variance);
  if (!std::isfinite(pilot_snr_db) || std::abs(implied - pilot_snr_db) > 1e-9) {
    throw ValidationError(fmt::format("pilot SNR {} dB inconsistent with P_t/sigma^2 = {} dB",
                                      pilot_snr_db, implied));
  }
}

SystemConfig config_from_snr(int num_users, int num_bs_antennas, int num_irs_elements,
                             int pilot_length, double snr_db, double correlation,
                             std::uint64_t seed) {
  if (!std::isfinite(snr_db)) {
    throw ValidationError(fmt::format("pilot SNR must be finite, got {}", snr_db));
  }
  SystemConfig cfg;
  cfg.num_users = num_users;
  cfg.num_bs_antennas = num_bs_antennas;
  cfg.num_irs_elements = num_irs_elements;
  cfg.pilot_length = pilot_length;
  cfg.num_subframes = num_irs_elements + 1;
  cfg.symbol_power = 1.0;
  cfg.noise_variance = std::pow(10.0, -snr_db / 10.0);
  cfg.pilot_snr_db = snr_db;
  cfg.coherence_correlation = correlation;
  cfg.rng_seed = seed;
  cfg.validate();
  return cfg;
}

SystemConfig with_snr(const SystemConfig& cfg, double snr_db) {
  return config_from_snr(cfg.num_users, cfg.num_bs_antennas, cfg.num_irs_elements,
                         cfg.pilot_length, snr_db, cfg.coherence_correlation, cfg.rng_seed);
}

}  // namespace irsce
