// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <vector>

#include "irsce/core/cmatrix.hpp"
#include "irsce/core/config.hpp"
#include "irsce/core/rng.hpp"

namespace irsce::channel {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfLight = 299792458.0;

/// Placement and large-scale propagation parameters. Arrays (BS and IRS) are
/// uniform linear arrays along the x axis with half-wavelength spacing.
struct GeometrySpec {
  Vec3 bs_position{0.0, 25.0, 20.0};
  Vec3 irs_position{70.0, 85.0, 10.0};
  std::vector<Vec3> user_positions;
  double carrier_freq_hz = 73e9;
  double rician_k_direct = 1.9952623149688795;  // 3 dB
  double rician_k_irs = 10.0;                   // 10 dB
  double pathloss_exponent_direct = 3.5;
  double pathloss_exponent_irs = 2.0;
  double shadowing_std_db = 4.0;
  /// Rescale the direct and the cascaded link class so that each has mean
  /// per-entry power `mean_channel_gain_db` averaged over users. Ratios
  /// between users are kept.
  bool normalize_gain = true;
  double mean_channel_gain_db = -20.0;

  /// Reference placement with the first K of its four user positions; K > 4
  /// repeats the pattern shifted 5 m along y.
  static GeometrySpec default_placement(int num_users);

  /// Unit large-scale gain: normalized to 0 dB, no shadowing.
  static GeometrySpec unit_gain(int num_users);

  void validate(int num_users) const;
};

/// Free-space path loss (c / (4 pi d f))^2, linear.
double free_space_path_loss(double distance_m, double carrier_freq_hz);

/// Response of an n-element x-axis ULA with half-wavelength spacing toward
/// the unit vector `direction`: a_m = exp(-j pi m direction_x).
CMatrix ula_response(int n, const Vec3& direction);

/// Large-scale description of one user's links: the LOS (mean) part of H and
/// the parameters needed to draw fresh small-scale fading with the same
/// marginal statistics.
struct LinkStatistics {
  int user_index = 0;
  CMatrix direct_los;      // M x 1, unit-power LOS response
  CMatrix irs_bs_los;      // M x N
  CMatrix user_irs_los;    // N x 1
  double direct_gain = 1;  // linear power gain applied to d_k
  double cascaded_gain = 1;
  double rician_k_direct = 0;
  double rician_k_irs = 0;

  /// E[H_k]: the LOS components weighted by their Rician shares.
  CMatrix mean() const;

  /// A fresh H_k = [d_k, G diag(f_k)] with independent fading.
  CMatrix draw(Rng& rng) const;
};

struct ChannelState {
  int user_index = 0;
  CMatrix H;  // M x (N+1): column 0 is d_k, columns 1..N are B_k
  std::shared_ptr<const LinkStatistics> stats;
};

/// One ChannelState per user. G is shared by all users in this draw;
/// shadowing is drawn once per call and stays fixed in `stats`.
std::vector<ChannelState> generate_channel(const SystemConfig& cfg, const GeometrySpec& geo, Rng& rng);

/// AR(1) step on the fading around the LOS mean H̄:
///   H_next = H̄ + rho (H_prev - H̄) + sqrt(1 - rho^2) (H_innov - H̄).
/// rho = 1 returns an exact copy.
ChannelState advance_coherence(const ChannelState& prev, double rho, Rng& rng);

/// Channel states of every user over consecutive coherence intervals.
struct Dataset {
  int num_users = 0;
  int rows = 0;  // M
  int cols = 0;  // N + 1
  std::vector<std::vector<ChannelState>> samples;  // [user][sample]
  std::vector<ChannelState> reference;             // one per user

  int num_samples() const { return samples.empty() ? 0 : static_cast<int>(samples.front().size()); }
};

/// The reference is the chain's first state; sample 0 is one coherence step
/// after it.
Dataset make_dataset(const SystemConfig& cfg, const GeometrySpec& geo, int n_samples, Rng& rng);

/// n_samples further states per user continuing from each user's last
/// sample; the reference is carried over.
Dataset continue_dataset(const Dataset& from, double rho, int n_samples, Rng& rng);

/// Lag-1 Pearson correlation of a user's sequence, computed on entries
/// centered by their per-entry mean over the sequence, real and imaginary
/// parts pooled.
double lag1_correlation(const std::vector<ChannelState>& sequence);

}  // namespace irsce::channel
