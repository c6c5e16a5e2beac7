// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/channel/channel.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "irsce/core/error.hpp"

namespace irsce::channel {
namespace {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Vec3 unit_from(const Vec3& from, const Vec3& to) {
  const double d = distance(from, to);
  return {(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d};
}

cdouble distance_phase(double d, double wavelength) {
  return std::polar(1.0, -2.0 * std::numbers::pi * std::fmod(d / wavelength, 1.0));
}

double path_loss(double d, double exponent, double freq) {
  return free_space_path_loss(1.0, freq) * std::pow(d, -exponent);
}

double los_share(double k) { return std::isinf(k) ? 1.0 : k / (k + 1.0); }
double scatter_share(double k) { return std::isinf(k) ? 0.0 : 1.0 / (k + 1.0); }

// sqrt(k/(k+1)) los + sqrt(1/(k+1)) CN(0, 1), entrywise.
CMatrix rician(const CMatrix& los, double k, Rng& rng) {
  CMatrix out(los.rows(), los.cols());
  const double a = std::sqrt(los_share(k));
  const double b = std::sqrt(scatter_share(k));
  for (std::size_t i = 0; i < out.size(); ++i) {
    cdouble v = a * los.entries()[i];
    if (b > 0.0) v += b * rng.complex_normal();
    out.entries()[i] = v;
  }
  return out;
}

CMatrix assemble(const CMatrix& d, const CMatrix& g, const CMatrix& f, double direct_gain,
                 double cascaded_gain) {
  const int m = g.rows(), n = g.cols();
  CMatrix h(m, n + 1);
  const double sd = std::sqrt(direct_gain), sc = std::sqrt(cascaded_gain);
  for (int r = 0; r < m; ++r) {
    h(r, 0) = sd * d(r, 0);
    for (int c = 0; c < n; ++c) h(r, c + 1) = sc * g(r, c) * f(c, 0);
  }
  return h;
}

}  // namespace

GeometrySpec GeometrySpec::default_placement(int num_users) {
  static constexpr Vec3 kUsers[4] = {{0, 0, 0}, {25, 10, 0}, {40, 30, 0}, {20, 15, 0}};
  GeometrySpec g;
  for (int k = 0; k < num_users; ++k) {
    Vec3 p = kUsers[k % 4];
    p[1] += 5.0 * (k / 4);
    g.user_positions.push_back(p);
  }
  return g;
}

GeometrySpec GeometrySpec::unit_gain(int num_users) {
  GeometrySpec g = default_placement(num_users);
  g.shadowing_std_db = 0.0;
  g.normalize_gain = true;
  g.mean_channel_gain_db = 0.0;
  return g;
}

void GeometrySpec::validate(int num_users) const {
  if (static_cast<int>(user_positions.size()) != num_users) {
    throw ValidationError(fmt::format("geometry: {} user positions for K = {}", user_positions.size(), num_users));
  }
  auto finite = [](const Vec3& p) { return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]); };
  if (!finite(bs_position) || !finite(irs_position)) throw ValidationError("geometry: non-finite BS/IRS position");
  for (const auto& p : user_positions) {
    if (!finite(p)) throw ValidationError("geometry: non-finite user position");
    if (distance(p, bs_position) <= 0.0 || distance(p, irs_position) <= 0.0) {
      throw ValidationError(fmt::format("geometry: user at ({}, {}, {}) coincides with the BS or IRS", p[0], p[1], p[2]));
    }
  }
  if (distance(bs_position, irs_position) <= 0.0) throw ValidationError("geometry: BS and IRS coincide");
  if (!(carrier_freq_hz > 0.0) || !std::isfinite(carrier_freq_hz)) {
    throw ValidationError(fmt::format("geometry: carrier_freq_hz must be positive, got {}", carrier_freq_hz));
  }
  if (!(rician_k_direct >= 0.0) || !(rician_k_irs >= 0.0)) {
    throw ValidationError("geometry: Rician K-factors must be >= 0");
  }
  if (!std::isfinite(pathloss_exponent_direct) || !std::isfinite(pathloss_exponent_irs)) {
    throw ValidationError("geometry: non-finite path-loss exponent");
  }
  if (!(shadowing_std_db >= 0.0) || !std::isfinite(shadowing_std_db)) {
    throw ValidationError("geometry: shadowing_std_db must be finite and >= 0");
  }
  if (!std::isfinite(mean_channel_gain_db)) throw ValidationError("geometry: non-finite mean_channel_gain_db");
}

double free_space_path_loss(double distance_m, double carrier_freq_hz) {
  const double r = kSpeedOfLight / (4.0 * std::numbers::pi * distance_m * carrier_freq_hz);
  return r * r;
}

CMatrix ula_response(int n, const Vec3& direction) {
  CMatrix a(n, 1);
  for (int m = 0; m < n; ++m) a(m, 0) = std::polar(1.0, -std::numbers::pi * m * direction[0]);
  return a;
}

CMatrix LinkStatistics::mean() const {
  const double a_d = std::sqrt(los_share(rician_k_direct));
  const double a_i = los_share(rician_k_irs);  // G and f each contribute sqrt
  return assemble(scale(direct_los, a_d), scale(irs_bs_los, a_i), user_irs_los, direct_gain, cascaded_gain);
}

CMatrix LinkStatistics::draw(Rng& rng) const {
  const CMatrix g = rician(irs_bs_los, rician_k_irs, rng);
  const CMatrix d = rician(direct_los, rician_k_direct, rng);
  const CMatrix f = rician(user_irs_los, rician_k_irs, rng);
  return assemble(d, g, f, direct_gain, cascaded_gain);
}

std::vector<ChannelState> generate_channel(const SystemConfig& cfg, const GeometrySpec& geo, Rng& rng) {
  cfg.validate();
  geo.validate(cfg.num_users);
  const int k_users = cfg.num_users, m = cfg.num_bs_antennas, n = cfg.num_irs_elements;
  const double lambda = kSpeedOfLight / geo.carrier_freq_hz;
  auto shadow = [&] {
    return geo.shadowing_std_db > 0.0 ? std::pow(10.0, geo.shadowing_std_db * rng.normal() / 10.0) : 1.0;
  };

  const double d_gi = distance(geo.irs_position, geo.bs_position);
  const CMatrix irs_bs_los = scale(
      multiply(ula_response(m, unit_from(geo.bs_position, geo.irs_position)),
               [&] {
                 CMatrix a = ula_response(n, unit_from(geo.irs_position, geo.bs_position));
                 CMatrix row(1, n);
                 for (int i = 0; i < n; ++i) row(0, i) = a(i, 0);
                 return row;
               }()),
      distance_phase(d_gi, lambda));
  const double g_gain = path_loss(d_gi, geo.pathloss_exponent_irs, geo.carrier_freq_hz) * shadow();

  std::vector<LinkStatistics> stats(k_users);
  for (int k = 0; k < k_users; ++k) {
    const Vec3& u = geo.user_positions[k];
    const double d_d = distance(u, geo.bs_position);
    const double d_f = distance(u, geo.irs_position);
    LinkStatistics& s = stats[k];
    s.user_index = k;
    s.direct_los = scale(ula_response(m, unit_from(geo.bs_position, u)), distance_phase(d_d, lambda));
    s.irs_bs_los = irs_bs_los;
    s.user_irs_los = scale(ula_response(n, unit_from(geo.irs_position, u)), distance_phase(d_f, lambda));
    s.direct_gain = path_loss(d_d, geo.pathloss_exponent_direct, geo.carrier_freq_hz) * shadow();
    s.cascaded_gain = g_gain * path_loss(d_f, geo.pathloss_exponent_irs, geo.carrier_freq_hz) * shadow();
    s.rician_k_direct = geo.rician_k_direct;
    s.rician_k_irs = geo.rician_k_irs;
  }
  if (geo.normalize_gain) {
    double direct_mean = 0.0, cascaded_mean = 0.0;
    for (const auto& s : stats) {
      direct_mean += s.direct_gain / k_users;
      cascaded_mean += s.cascaded_gain / k_users;
    }
    const double target = db_to_linear(geo.mean_channel_gain_db);
    for (auto& s : stats) {
      s.direct_gain *= target / direct_mean;
      s.cascaded_gain *= target / cascaded_mean;
    }
  }

  const CMatrix g = rician(irs_bs_los, geo.rician_k_irs, rng);
  std::vector<ChannelState> out;
  out.reserve(k_users);
  for (int k = 0; k < k_users; ++k) {
    auto s = std::make_shared<const LinkStatistics>(std::move(stats[k]));
    const CMatrix d = rician(s->direct_los, s->rician_k_direct, rng);
    const CMatrix f = rician(s->user_irs_los, s->rician_k_irs, rng);
    out.push_back({k, assemble(d, g, f, s->direct_gain, s->cascaded_gain), s});
  }
  return out;
}

ChannelState advance_coherence(const ChannelState& prev, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError(fmt::format("coherence correlation {} not in [0, 1]", rho));
  if (!prev.stats) throw ValidationError("advance_coherence: state carries no link statistics");
  if (rho == 1.0) return prev;
  const CMatrix mean = prev.stats->mean();
  const CMatrix innov = prev.stats->draw(rng);
  const double w = std::sqrt(1.0 - rho * rho);
  ChannelState next{prev.user_index, CMatrix(prev.H.rows(), prev.H.cols()), prev.stats};
  for (std::size_t i = 0; i < next.H.size(); ++i) {
    const cdouble mu = mean.entries()[i];
    next.H.entries()[i] = mu + rho * (prev.H.entries()[i] - mu) + w * (innov.entries()[i] - mu);
  }
  return next;
}

Dataset make_dataset(const SystemConfig& cfg, const GeometrySpec& geo, int n_samples, Rng& rng) {
  if (n_samples < 1) throw ValidationError(fmt::format("n_samples must be >= 1, got {}", n_samples));
  Dataset ds;
  ds.num_users = cfg.num_users;
  ds.rows = cfg.num_bs_antennas;
  ds.cols = cfg.channel_cols();
  ds.reference = generate_channel(cfg, geo, rng);
  ds.samples.resize(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    auto& seq = ds.samples[k];
    seq.reserve(n_samples);
    const ChannelState* prev = &ds.reference[k];
    for (int t = 0; t < n_samples; ++t) {
      seq.push_back(advance_coherence(*prev, cfg.coherence_correlation, rng));
      prev = &seq.back();
    }
  }
  return ds;
}

Dataset continue_dataset(const Dataset& from, double rho, int n_samples, Rng& rng) {
  if (n_samples < 1) throw ValidationError(fmt::format("n_samples must be >= 1, got {}", n_samples));
  if (from.num_samples() < 1) throw ValidationError("continue_dataset: source has no samples");
  Dataset ds;
  ds.num_users = from.num_users;
  ds.rows = from.rows;
  ds.cols = from.cols;
  ds.reference = from.reference;
  ds.samples.resize(from.num_users);
  for (int k = 0; k < from.num_users; ++k) {
    auto& seq = ds.samples[k];
    seq.reserve(n_samples);
    const ChannelState* prev = &from.samples[k].back();
    for (int t = 0; t < n_samples; ++t) {
      seq.push_back(advance_coherence(*prev, rho, rng));
      prev = &seq.back();
    }
  }
  return ds;
}

double lag1_correlation(const std::vector<ChannelState>& sequence) {
  if (sequence.size() < 3) throw ValidationError("lag1_correlation: need at least 3 states");
  const std::size_t entries = sequence.front().H.size();
  std::vector<cdouble> mean(entries, 0.0);
  for (const auto& s : sequence) {
    for (std::size_t i = 0; i < entries; ++i) mean[i] += s.H.entries()[i];
  }
  for (auto& v : mean) v /= static_cast<double>(sequence.size());
  double cross = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t t = 0; t + 1 < sequence.size(); ++t) {
    for (std::size_t i = 0; i < entries; ++i) {
      const cdouble a = sequence[t].H.entries()[i] - mean[i];
      const cdouble b = sequence[t + 1].H.entries()[i] - mean[i];
      cross += a.real() * b.real() + a.imag() * b.imag();
      var_a += std::norm(a);
      var_b += std::norm(b);
    }
  }
  return cross / std::sqrt(var_a * var_b);
}

}  // namespace irsce::channel
