// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irsce/core/cmatrix.hpp"
#include "irsce/core/rng.hpp"
#include "irsce/nn/model.hpp"
#include "irsce/pilot/protocol.hpp"

namespace irsce::est {

/// Ĥ = X P^H / C, the exact inverse of a DFT schedule.
CMatrix estimate_ls(const CMatrix& X, const pilot::ReflectionSchedule& schedule);

// ---- real/imaginary image packing -----------------------------------------
// Channel 0 holds s Re(z), channel 1 holds s Im(z); H and W are the matrix
// rows and columns.

nn::Tensor4<float> complex_to_tensor(const CMatrix& m, double s);
CMatrix tensor_to_complex(const nn::Tensor4<float>& t, double s, int sample = 0);

/// Writes `m` into sample `n` of a (batch, 2, rows, cols) tensor.
void pack_sample(const CMatrix& m, double s, nn::Tensor4<float>& t, int n);

/// s = 1 / mean |h| over every entry of every matrix. Throws ValidationError
/// on an empty or all-zero set.
double compute_scaling_constant(std::span<const CMatrix> channels);

// ---- reference pair ---------------------------------------------------------

enum class Provenance { exact, ls, drn_style };

std::string_view provenance_name(Provenance p);
/// Accepts "exact", "ls", "drn_style"; anything else is a ValidationError.
Provenance parse_provenance(std::string_view name);

struct ReferencePair {
  Provenance provenance = Provenance::ls;
  std::vector<CMatrix> x_ref;  // per user, M x C
  std::vector<CMatrix> h_ref;  // per user, M x (N+1)

  int num_users() const { return static_cast<int>(x_ref.size()); }
  void validate(int rows, int cols) const;
};

// ---- training ---------------------------------------------------------------

struct TrainingConfig {
  double learning_rate = 1e-4;
  int batch_size = 128;
  int max_epochs = 30;
  double eta_threshold = 1e-4;
  int patience = 3;

  void validate() const;
};

/// Network inputs and targets before scaling, with the squared Frobenius norm
/// of the true channel that normalizes each sample's error.
struct TrainingSet {
  std::vector<CMatrix> inputs;
  std::vector<CMatrix> targets;
  std::vector<double> channel_norm_sq;

  std::size_t size() const { return inputs.size(); }
};

struct TrainingReport {
  std::vector<double> loss_curve;  // epoch-average training NMSE
  int epochs_run = 0;
  bool converged = false;  // stopped by the threshold rather than max_epochs
};

using EpochCallback = std::function<void(int epoch, double mean_nmse)>;

/// Minimizes the mean per-sample NMSE ‖f(s x)/s − t‖² / ‖H‖² with Adam. The
/// previous-epoch loss starts at +inf; training stops once
/// (f_prev − f) / f <= eta_threshold holds for `patience` consecutive epochs,
/// or after max_epochs. The final parameters are kept. A non-finite loss
/// throws NumericalError naming the epoch and batch.
TrainingReport train_network(nn::Model<float>& model, const TrainingSet& data, double s,
                             const TrainingConfig& cfg, Rng& rng, const EpochCallback& on_epoch = {});

// ---- mismatch estimator ------------------------------------------------------

nn::ModelArchitecture mismatch_architecture();

struct MismatchModel {
  nn::Model<float> net;
  ReferencePair reference;
  double scaling_constant = 1.0;
};

/// X̄ = X − X_Ref as input, H − H_Ref as target, pooled over users.
/// x_train and h_train are indexed [user][sample].
TrainingSet mismatch_training_set(const std::vector<std::vector<CMatrix>>& x_train,
                                  const std::vector<std::vector<CMatrix>>& h_train,
                                  const ReferencePair& reference);

/// Fresh He-initialized network; s from the training channels.
MismatchModel init_mismatch_model(const std::vector<std::vector<CMatrix>>& h_train, ReferencePair reference,
                                  Rng& rng, const nn::ModelArchitecture& arch = mismatch_architecture());

struct MismatchTraining {
  MismatchModel model;
  TrainingReport report;
};

MismatchTraining train_mismatch_model(const std::vector<std::vector<CMatrix>>& x_train,
                                      const std::vector<std::vector<CMatrix>>& h_train,
                                      ReferencePair reference, const TrainingConfig& cfg, Rng& rng,
                                      const EpochCallback& on_epoch = {});

/// Continues training an existing model (Adam state and step counter kept).
TrainingReport continue_training(MismatchModel& model, const std::vector<std::vector<CMatrix>>& x_train,
                                 const std::vector<std::vector<CMatrix>>& h_train, const TrainingConfig& cfg,
                                 Rng& rng, const EpochCallback& on_epoch = {});

/// Ĥ = H_Ref + f_MM(s (X − X_Ref)) / s for the observation's user.
CMatrix estimate_mismatch(const MismatchModel& model, const pilot::Observation& obs);
std::vector<CMatrix> estimate_mismatch(const MismatchModel& model, std::span<const pilot::Observation> obs);

// ---- DRN-style denoiser -------------------------------------------------------

/// Residual blocks with the middle group repeated three times.
nn::ModelArchitecture drn_style_architecture(int middle_repeats = 3);

struct DrnStyleModel {
  nn::Model<float> net;
  double scaling_constant = 1.0;
};

/// LS estimate as input, true channel as target.
TrainingSet drn_style_training_set(const std::vector<std::vector<CMatrix>>& x_train,
                                   const std::vector<std::vector<CMatrix>>& h_train,
                                   const pilot::ReflectionSchedule& schedule);

struct DrnStyleTraining {
  DrnStyleModel model;
  TrainingReport report;
};

DrnStyleTraining train_drn_style_model(const std::vector<std::vector<CMatrix>>& x_train,
                                       const std::vector<std::vector<CMatrix>>& h_train,
                                       const pilot::ReflectionSchedule& schedule, const TrainingConfig& cfg,
                                       Rng& rng, const nn::ModelArchitecture& arch = drn_style_architecture(),
                                       const EpochCallback& on_epoch = {});

TrainingReport continue_training(DrnStyleModel& model, const std::vector<std::vector<CMatrix>>& x_train,
                                 const std::vector<std::vector<CMatrix>>& h_train,
                                 const pilot::ReflectionSchedule& schedule, const TrainingConfig& cfg, Rng& rng,
                                 const EpochCallback& on_epoch = {});

/// Ĥ = f_DRN(s X P^H / C) / s.
CMatrix estimate_drn_style(const DrnStyleModel& model, const CMatrix& X, const pilot::ReflectionSchedule& schedule);
std::vector<CMatrix> estimate_drn_style(const DrnStyleModel& model, std::span<const pilot::Observation> obs,
                                        const pilot::ReflectionSchedule& schedule);

/// H_Ref for the given provenance: the true reference channel, the LS
/// estimate of X_Ref, or the DRN-style estimate of X_Ref (`drn` required).
ReferencePair make_reference_pair(Provenance provenance, std::vector<CMatrix> x_ref,
                                  const std::vector<CMatrix>& h_true_ref,
                                  const pilot::ReflectionSchedule& schedule, const DrnStyleModel* drn = nullptr);

}  // namespace irsce::est
