// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/pilot/protocol.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "irsce/core/error.hpp"

namespace irsce::pilot {
namespace {

cdouble dft_entry(long row, long col, long size) {
  // Reduce the exponent first so large products keep full phase accuracy.
  const long e = (row * col) % size;
  return std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(size));
}

}  // namespace

PilotMatrix make_pilots(const SystemConfig& cfg) {
  if (cfg.pilot_length < cfg.num_users) {
    throw ValidationError(fmt::format("pilot rank: L = {} < K = {}, orthogonal pilots do not exist",
                                      cfg.pilot_length, cfg.num_users));
  }
  const double amp = std::sqrt(cfg.symbol_power);
  PilotMatrix p{CMatrix(cfg.num_users, cfg.pilot_length)};
  for (int k = 0; k < cfg.num_users; ++k) {
    for (int l = 0; l < cfg.pilot_length; ++l) p.U(k, l) = amp * dft_entry(k, l, cfg.pilot_length);
  }
  return p;
}

ReflectionSchedule make_schedule(const SystemConfig& cfg) {
  if (cfg.num_subframes != cfg.num_irs_elements + 1) {
    throw ValidationError(fmt::format("schedule: C = {} must equal N + 1 = {}", cfg.num_subframes,
                                      cfg.num_irs_elements + 1));
  }
  const int c = cfg.num_subframes;
  ReflectionSchedule s{CMatrix(c, c)};
  for (int n = 0; n < c; ++n) {
    for (int col = 0; col < c; ++col) s.P(n, col) = dft_entry(n, col, c);
  }
  return s;
}

std::vector<CMatrix> synthesize_received(const std::vector<CMatrix>& H, const PilotMatrix& pilots,
                                         const ReflectionSchedule& schedule, const SystemConfig& cfg,
                                         Rng& rng) {
  const int k_users = cfg.num_users, m = cfg.num_bs_antennas, l_len = cfg.pilot_length;
  const int c_count = cfg.num_subframes;
  if (static_cast<int>(H.size()) != k_users) {
    throw DimensionError(fmt::format("synthesize_received: {} channels for K = {}", H.size(), k_users));
  }
  if (pilots.U.rows() != k_users || pilots.U.cols() != l_len) {
    throw DimensionError(fmt::format("synthesize_received: pilots {} vs {}x{}", pilots.U.shape(), k_users, l_len));
  }
  if (schedule.P.rows() != cfg.channel_cols() || schedule.P.cols() != c_count) {
    throw DimensionError(fmt::format("synthesize_received: schedule {} vs {}x{}", schedule.P.shape(),
                                     cfg.channel_cols(), c_count));
  }
  for (const auto& h : H) {
    if (h.rows() != m || h.cols() != cfg.channel_cols()) {
      throw DimensionError(fmt::format("synthesize_received: channel {} vs {}x{}", h.shape(), m, cfg.channel_cols()));
    }
  }
  // Column c of HP_k is H_k p_c.
  std::vector<CMatrix> hp;
  hp.reserve(k_users);
  for (const auto& h : H) hp.push_back(multiply(h, schedule.P));

  const double sigma = std::sqrt(cfg.noise_variance);
  std::vector<CMatrix> frames;
  frames.reserve(c_count);
  for (int c = 0; c < c_count; ++c) {
    CMatrix s(m, l_len);
    for (int k = 0; k < k_users; ++k) {
      for (int r = 0; r < m; ++r) {
        const cdouble g = hp[k](r, c);
        for (int l = 0; l < l_len; ++l) s(r, l) += g * pilots.U(k, l);
      }
    }
    for (cdouble& v : s.entries()) v += sigma * rng.complex_normal();
    frames.push_back(std::move(s));
  }
  return frames;
}

std::vector<Observation> despread(const std::vector<CMatrix>& frames, const PilotMatrix& pilots,
                                  const SystemConfig& cfg) {
  const int c_count = cfg.num_subframes;
  if (static_cast<int>(frames.size()) != c_count) {
    throw DimensionError(fmt::format("despread: {} frames, expected C = {}", frames.size(), c_count));
  }
  const double norm = 1.0 / (cfg.symbol_power * cfg.pilot_length);
  const int m = cfg.num_bs_antennas, l_len = cfg.pilot_length;
  std::vector<Observation> out;
  out.reserve(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    Observation o{k, CMatrix(m, c_count), std::nullopt};
    for (int c = 0; c < c_count; ++c) {
      const CMatrix& s = frames[c];
      if (s.rows() != m || s.cols() != l_len) {
        throw DimensionError(fmt::format("despread: frame {} vs {}x{}", s.shape(), m, l_len));
      }
      for (int r = 0; r < m; ++r) {
        cdouble acc = 0.0;
        for (int l = 0; l < l_len; ++l) acc += s(r, l) * std::conj(pilots.U(k, l));
        o.X(r, c) = acc * norm;
      }
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Observation> observe(const std::vector<CMatrix>& H, const PilotMatrix& pilots,
                                 const ReflectionSchedule& schedule, const SystemConfig& cfg, Rng& rng,
                                 bool keep_noise) {
  auto obs = despread(synthesize_received(H, pilots, schedule, cfg, rng), pilots, cfg);
  if (keep_noise) {
    for (auto& o : obs) o.Z = subtract(o.X, multiply(H[o.user_index], schedule.P));
  }
  return obs;
}

}  // namespace irsce::pilot
