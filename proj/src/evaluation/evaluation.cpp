// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/evaluation/evaluation.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "irsce/core/error.hpp"

namespace irsce::eval {
namespace {

using Mat = CMatrix::Storage;

// a(j, i) = g_j^H w_i.
Mat gram(const Mat& G, const Mat& W) { return G.adjoint() * W; }

double objective_of(const Mat& A, double noise_variance) {
  const int k = static_cast<int>(A.rows());
  double se = 0.0;
  for (int j = 0; j < k; ++j) {
    double interference = noise_variance;
    for (int i = 0; i < k; ++i) {
      if (i != j) interference += std::norm(A(j, i));
    }
    se += std::log2(1.0 + std::norm(A(j, j)) / interference);
  }
  return se / k;
}

double user_sinr(const Mat& A, int j, double noise_variance) {
  double interference = noise_variance;
  for (int i = 0; i < A.cols(); ++i) {
    if (i != j) interference += std::norm(A(j, i));
  }
  return std::norm(A(j, j)) / interference;
}

Mat effective_channels(const std::vector<CMatrix>& H, const Mat& R) {
  const int m = H.front().rows();
  Mat G(m, static_cast<int>(H.size()));
  for (std::size_t k = 0; k < H.size(); ++k) {
    const auto& h = H[k].eigen();
    G.col(k) = h.col(0);
    if (h.cols() > 1) G.col(k) += h.rightCols(h.cols() - 1) * R.col(k);
  }
  return G;
}

void check_channels(const std::vector<CMatrix>& H) {
  if (H.empty()) throw ValidationError("beamforming needs at least one user");
  for (const auto& h : H) {
    if (h.rows() != H.front().rows() || h.cols() != H.front().cols() || h.cols() < 1) {
      throw DimensionError(fmt::format("user channels {} and {} differ", h.shape(), H.front().shape()));
    }
  }
}

// One sweep of per-element phase updates over every user's IRS vector (or
// the shared one), each update kept only when it raises the objective.
void phase_sweep(const std::vector<CMatrix>& H, const Mat& W, Mat& R, Mat& A, const BeamformerConfig& cfg,
                 const std::vector<cdouble>& grid) {
  const int k_users = static_cast<int>(H.size());
  const int n_elem = static_cast<int>(R.rows());
  const int owners = cfg.shared_r ? 1 : k_users;
  Mat C(k_users, k_users);  // c(j, i) = h_{j,n}^H w_i for the element being updated
  for (int owner = 0; owner < owners; ++owner) {
    for (int n = 0; n < n_elem; ++n) {
      const int j_first = cfg.shared_r ? 0 : owner;
      const int j_last = cfg.shared_r ? k_users : owner + 1;
      for (int j = j_first; j < j_last; ++j) C.row(j) = H[j].eigen().col(n + 1).adjoint() * W;
      const cdouble current = R(n, owner);
      auto candidate = [&](cdouble phase) {
        Mat T = A;
        for (int j = j_first; j < j_last; ++j) T.row(j) += (std::conj(phase) - std::conj(current)) * C.row(j);
        return T;
      };
      double best = cfg.shared_r ? objective_of(A, cfg.noise_variance) : user_sinr(A, owner, cfg.noise_variance);
      cdouble best_phase = current;
      for (const cdouble phase : grid) {
        const Mat T = candidate(phase);
        const double v = cfg.shared_r ? objective_of(T, cfg.noise_variance) : user_sinr(T, owner, cfg.noise_variance);
        if (v > best) {
          best = v;
          best_phase = phase;
        }
      }
      if (best_phase != current) {
        A = candidate(best_phase);
        if (cfg.shared_r) {
          R.row(n).setConstant(best_phase);
        } else {
          R(n, owner) = best_phase;
        }
      }
    }
  }
}

}  // namespace

double nmse(const CMatrix& h_true, const CMatrix& h_est) {
  if (h_true.rows() != h_est.rows() || h_true.cols() != h_est.cols()) {
    throw DimensionError(fmt::format("nmse: true {} vs estimate {}", h_true.shape(), h_est.shape()));
  }
  const double denom = frobenius_norm_sq(h_true);
  if (!(denom > 0.0)) throw ValidationError("nmse: the true channel is zero");
  return (h_est.eigen() - h_true.eigen()).squaredNorm() / denom;
}

CMatrix downlink_from_uplink(const CMatrix& H) { return hermitian_transpose(H); }

void BeamformerConfig::validate() const {
  if (!(power > 0.0)) throw ValidationError(fmt::format("beamforming power must be > 0, got {}", power));
  if (!(noise_variance > 0.0)) throw ValidationError(fmt::format("noise variance must be > 0, got {}", noise_variance));
  if (max_rounds < 1) throw ValidationError(fmt::format("max_rounds must be >= 1, got {}", max_rounds));
  if (phase_grid < 1) throw ValidationError(fmt::format("phase_grid must be >= 1, got {}", phase_grid));
  if (!(tolerance >= 0.0)) throw ValidationError(fmt::format("tolerance must be >= 0, got {}", tolerance));
}

CMatrix effective_channel(const CMatrix& H, const CMatrix& r) {
  if (r.cols() != 1 || r.rows() != H.cols() - 1) {
    throw DimensionError(fmt::format("effective channel: H {} with r {}", H.shape(), r.shape()));
  }
  Mat g = H.eigen().col(0);
  if (H.cols() > 1) g += H.eigen().rightCols(H.cols() - 1) * r.eigen();
  return CMatrix(std::move(g));
}

std::vector<double> sinr(const std::vector<CMatrix>& H, const CMatrix& W, const CMatrix& R, double noise_variance) {
  check_channels(H);
  const int k = static_cast<int>(H.size());
  if (W.rows() != H.front().rows() || W.cols() != k || R.rows() != H.front().cols() - 1 || R.cols() != k) {
    throw DimensionError(fmt::format("sinr: W {} and R {} for {} users of {}", W.shape(), R.shape(), k,
                                     H.front().shape()));
  }
  const Mat A = gram(effective_channels(H, R.eigen()), W.eigen());
  std::vector<double> out(k);
  for (int j = 0; j < k; ++j) out[j] = user_sinr(A, j, noise_variance);
  return out;
}

double spectral_efficiency_of(const std::vector<double>& gamma) {
  if (gamma.empty()) return 0.0;
  double se = 0.0;
  for (const double g : gamma) se += std::log2(1.0 + g);
  return se / static_cast<double>(gamma.size());
}

CMatrix zero_forcing(const CMatrix& G, double power, bool* regularized) {
  const auto& g = G.eigen();
  const int k = static_cast<int>(g.cols());
  Mat gram_g = g.adjoint() * g;
  Eigen::FullPivLU<Mat> lu(gram_g);
  lu.setThreshold(1e-10);
  bool ridge = lu.rank() < k;
  if (ridge) {
    const double mean_diag = gram_g.diagonal().real().sum() / k;
    gram_g += Mat::Identity(k, k) * (1e-6 * (mean_diag > 0.0 ? mean_diag : 1.0));
  }
  Mat W = g * gram_g.partialPivLu().solve(Mat::Identity(k, k));
  const double per_user = std::sqrt(power / k);
  for (int i = 0; i < k; ++i) {
    const double norm = W.col(i).norm();
    if (norm > 0.0 && std::isfinite(norm)) {
      W.col(i) *= per_user / norm;
    } else {
      W.col(i).setZero();
    }
  }
  if (regularized) *regularized = ridge;
  return CMatrix(std::move(W));
}

BeamformingSolution ZfPhaseAscent::optimize(const std::vector<CMatrix>& H_est, const BeamformerConfig& cfg) const {
  cfg.validate();
  check_channels(H_est);
  const int k = static_cast<int>(H_est.size());
  const int n = H_est.front().cols() - 1;

  std::vector<cdouble> grid(cfg.phase_grid);
  for (int i = 0; i < cfg.phase_grid; ++i) grid[i] = std::polar(1.0, 2.0 * std::numbers::pi * i / cfg.phase_grid);

  BeamformingSolution sol;
  Mat R = Mat::Ones(n, k);
  bool ridge = false;
  Mat W = zero_forcing(CMatrix(effective_channels(H_est, R)), cfg.power, &ridge).eigen();
  sol.regularized = ridge;
  Mat A = gram(effective_channels(H_est, R), W);
  double objective = objective_of(A, cfg.noise_variance);
  sol.objective_trace.push_back(objective);

  for (int round = 0; round < cfg.max_rounds; ++round) {
    const double start = objective;
    phase_sweep(H_est, W, R, A, cfg, grid);
    objective = objective_of(A, cfg.noise_variance);

    const Mat G = effective_channels(H_est, R);
    Mat W_new = zero_forcing(CMatrix(G), cfg.power, &ridge).eigen();
    Mat A_new = gram(G, W_new);
    const double zf_objective = objective_of(A_new, cfg.noise_variance);
    if (zf_objective > objective) {
      W = std::move(W_new);
      A = std::move(A_new);
      objective = zf_objective;
      sol.regularized = sol.regularized || ridge;
    }
    sol.objective_trace.push_back(objective);
    if (objective - start < cfg.tolerance) break;
  }
  sol.W = CMatrix(std::move(W));
  sol.R = CMatrix(std::move(R));
  return sol;
}

SEReport spectral_efficiency(const std::vector<CMatrix>& H_true, const BeamformingSolution& solution,
                             double noise_variance, std::string method, double pilot_snr_db) {
  SEReport report;
  report.method = std::move(method);
  report.pilot_snr_db = pilot_snr_db;
  report.per_user_sinr = sinr(H_true, solution.W, solution.R, noise_variance);
  report.se_bps_hz = spectral_efficiency_of(report.per_user_sinr);
  return report;
}

TimingStats time_inference(const std::function<void(std::size_t)>& estimate, std::size_t n_trials,
                           std::size_t warmup) {
  if (n_trials < 100) throw ValidationError(fmt::format("time_inference needs >= 100 trials, got {}", n_trials));
  for (std::size_t i = 0; i < warmup; ++i) estimate(i % n_trials);
  std::vector<double> ms(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    estimate(i);
    ms[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  double mean = 0.0;
  for (const double v : ms) mean += v;
  mean /= static_cast<double>(n_trials);
  double var = 0.0;
  for (const double v : ms) var += (v - mean) * (v - mean);
  return TimingStats{mean, std::sqrt(var / static_cast<double>(n_trials - 1)), n_trials};
}

}  // namespace irsce::eval
