// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "irsce/core/cmatrix.hpp"
#include "irsce/core/config.hpp"
#include "irsce/core/rng.hpp"

namespace irsce::pilot {

/// Row k is user k's pilot u_k: the first K rows of the L-point DFT matrix
/// scaled by sqrt(P_t), so u_i^H u_j = P_t L delta_ij.
struct PilotMatrix {
  CMatrix U;  // K x L
};

/// C-point DFT reflection schedule, P(n, c) = exp(-2 pi i n c / C). Column c
/// is p_c = [1, r_c]; every reflection amplitude is 1.
struct ReflectionSchedule {
  CMatrix P;  // (N+1) x C
};

/// De-spread observation X_k = H_k P + Z_k.
struct Observation {
  int user_index = 0;
  CMatrix X;                 // M x C
  std::optional<CMatrix> Z;  // noise part, kept for diagnostics only
};

PilotMatrix make_pilots(const SystemConfig& cfg);
ReflectionSchedule make_schedule(const SystemConfig& cfg);

/// Received frames S_c = sum_k H_k p_c u_k^T + N_c, c = 0..C-1, each M x L,
/// with N_c entries CN(0, sigma^2). The noise is drawn as sigma times unit
/// draws, so one seed gives the same normalized noise at every SNR.
std::vector<CMatrix> synthesize_received(const std::vector<CMatrix>& H, const PilotMatrix& pilots,
                                         const ReflectionSchedule& schedule, const SystemConfig& cfg,
                                         Rng& rng);

/// x_{c,k} = S_c u_k^* / (P_t L), assembled column by column into X_k.
std::vector<Observation> despread(const std::vector<CMatrix>& frames, const PilotMatrix& pilots,
                                  const SystemConfig& cfg);

/// synthesize_received followed by despread, with Z filled in when
/// keep_noise is set.
std::vector<Observation> observe(const std::vector<CMatrix>& H, const PilotMatrix& pilots,
                                 const ReflectionSchedule& schedule, const SystemConfig& cfg, Rng& rng,
                                 bool keep_noise = false);

}  // namespace irsce::pilot
