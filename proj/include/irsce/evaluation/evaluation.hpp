// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "irsce/core/cmatrix.hpp"

namespace irsce::eval {

/// ‖Ĥ − H‖_F² / ‖H‖_F². Throws ValidationError for H = 0 and
/// DimensionError when the shapes differ.
double nmse(const CMatrix& h_true, const CMatrix& h_est);

/// TDD reciprocity: the downlink channel is H^H.
CMatrix downlink_from_uplink(const CMatrix& H);

struct BeamformerConfig {
  double power = 1.0;           // P_bf, total over users
  double noise_variance = 1.0;  // sigma^2 in the SINR
  int max_rounds = 20;
  double tolerance = 1e-4;      // stop when a round gains less objective
  int phase_grid = 64;          // candidate phases per element
  bool shared_r = false;        // one IRS vector for every user

  void validate() const;
};

/// Columns w_k of W (M x K) and r_k of R (N x K, unit modulus).
struct BeamformingSolution {
  CMatrix W;
  CMatrix R;
  std::vector<double> objective_trace;  // objective after each round, first entry is the start
  bool regularized = false;             // ZF fell back to a ridge inverse
};

/// g_k = B_k r_k + d_k for H_k = [d_k, B_k].
CMatrix effective_channel(const CMatrix& H, const CMatrix& r);

/// γ_k = |g_k^H w_k|² / (Σ_{i≠k} |g_k^H w_i|² + σ²) with user k's own r_k in
/// g_k, as the SINR expression is written.
std::vector<double> sinr(const std::vector<CMatrix>& H, const CMatrix& W, const CMatrix& R, double noise_variance);

/// Σ_k log2(1 + γ_k) / K.
double spectral_efficiency_of(const std::vector<double>& gamma);

class Beamformer {
 public:
  virtual ~Beamformer() = default;
  virtual BeamformingSolution optimize(const std::vector<CMatrix>& H_est, const BeamformerConfig& cfg) const = 0;
};

/// Alternates an equal-power zero-forcing precoder on the effective channels
/// with per-element IRS phase coordinate ascent over a uniform phase grid.
/// Either step is kept only when it raises the objective, so the trace never
/// decreases.
class ZfPhaseAscent final : public Beamformer {
 public:
  BeamformingSolution optimize(const std::vector<CMatrix>& H_est, const BeamformerConfig& cfg) const override;
};

/// Equal-power ZF precoder for the columns of `G` (M x K), each column of the
/// result scaled to ‖w_k‖² = power / K. Sets `*regularized` when G^H G is
/// singular and a ridge of 1e-6 times its mean diagonal was added.
CMatrix zero_forcing(const CMatrix& G, double power, bool* regularized = nullptr);

struct SEReport {
  std::string method;
  double pilot_snr_db = 0.0;
  std::vector<double> per_user_sinr;
  double se_bps_hz = 0.0;
};

/// Evaluates a solution optimized on estimated CSI against the true channels.
SEReport spectral_efficiency(const std::vector<CMatrix>& H_true, const BeamformingSolution& solution,
                             double noise_variance, std::string method = {}, double pilot_snr_db = 0.0);

struct TimingStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t trials = 0;
};

/// Times `estimate(i)` for i = 0..n_trials-1 after `warmup` untimed calls.
/// Requires n_trials >= 100.
TimingStats time_inference(const std::function<void(std::size_t)>& estimate, std::size_t n_trials,
                           std::size_t warmup = 50);

}  // namespace irsce::eval
