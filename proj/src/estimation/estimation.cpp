// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/estimation/estimation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "irsce/core/error.hpp"

namespace irsce::est {
namespace {

constexpr int kInferenceChunk = 256;

void require_shape(const CMatrix& m, int rows, int cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(fmt::format("{}: got {}, expected ({}, {})", what, m.shape(), rows, cols));
  }
}

// Runs the network over `inputs` in chunks and maps each output back to a
// complex matrix.
std::vector<CMatrix> run_network(const nn::Model<float>& net, std::span<const CMatrix> inputs, double s) {
  std::vector<CMatrix> out;
  out.reserve(inputs.size());
  for (std::size_t first = 0; first < inputs.size(); first += kInferenceChunk) {
    const int n = static_cast<int>(std::min<std::size_t>(kInferenceChunk, inputs.size() - first));
    const int rows = inputs[first].rows(), cols = inputs[first].cols();
    nn::Tensor4<float> x = nn::Tensor4<float>::uninitialized(n, 2, rows, cols);
    for (int i = 0; i < n; ++i) {
      require_shape(inputs[first + i], rows, cols, "network input");
      pack_sample(inputs[first + i], s, x, i);
    }
    const nn::Tensor4<float> y = net.infer(x);
    for (int i = 0; i < n; ++i) out.push_back(tensor_to_complex(y, s, i));
  }
  return out;
}

std::vector<CMatrix> pooled(const std::vector<std::vector<CMatrix>>& by_user) {
  std::vector<CMatrix> all;
  for (const auto& seq : by_user) all.insert(all.end(), seq.begin(), seq.end());
  return all;
}

void check_pairing(const std::vector<std::vector<CMatrix>>& x, const std::vector<std::vector<CMatrix>>& h) {
  if (x.size() != h.size() || x.empty()) {
    throw DimensionError(fmt::format("training data: {} observation users vs {} channel users", x.size(), h.size()));
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k].size() != h[k].size() || x[k].empty()) {
      throw DimensionError(fmt::format("training data: user {} has {} observations and {} channels", k,
                                       x[k].size(), h[k].size()));
    }
  }
}

}  // namespace

CMatrix estimate_ls(const CMatrix& X, const pilot::ReflectionSchedule& schedule) {
  const int c = schedule.P.cols();
  return scale(multiply(X, hermitian_transpose(schedule.P)), 1.0 / c);
}

nn::Tensor4<float> complex_to_tensor(const CMatrix& m, double s) {
  nn::Tensor4<float> t = nn::Tensor4<float>::uninitialized(1, 2, m.rows(), m.cols());
  pack_sample(m, s, t, 0);
  return t;
}

void pack_sample(const CMatrix& m, double s, nn::Tensor4<float>& t, int n) {
  if (!(s > 0.0)) throw ValidationError(fmt::format("scaling constant must be positive, got {}", s));
  if (t.channels() != 2 || t.height() != m.rows() || t.width() != m.cols() || n < 0 || n >= t.batch()) {
    throw DimensionError(fmt::format("pack {} into sample {} of {}", m.shape(), n, t.shape()));
  }
  float* re = t.plane(n, 0);
  float* im = t.plane(n, 1);
  const auto e = m.entries();
  for (std::size_t i = 0; i < e.size(); ++i) {
    re[i] = static_cast<float>(s * e[i].real());
    im[i] = static_cast<float>(s * e[i].imag());
  }
}

CMatrix tensor_to_complex(const nn::Tensor4<float>& t, double s, int sample) {
  if (!(s > 0.0)) throw ValidationError(fmt::format("scaling constant must be positive, got {}", s));
  if (t.channels() != 2 || sample < 0 || sample >= t.batch()) {
    throw DimensionError(fmt::format("tensor {} has no two-channel sample {}", t.shape(), sample));
  }
  CMatrix m(t.height(), t.width());
  const float* re = t.plane(sample, 0);
  const float* im = t.plane(sample, 1);
  auto e = m.entries();
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = cdouble(re[i] / s, im[i] / s);
  return m;
}

double compute_scaling_constant(std::span<const CMatrix> channels) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& h : channels) {
    for (const cdouble z : h.entries()) sum += std::abs(z);
    count += h.size();
  }
  if (count == 0) throw ValidationError("scaling constant: empty dataset");
  if (!(sum > 0.0)) throw ValidationError("scaling constant: every channel entry is zero");
  return static_cast<double>(count) / sum;
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::exact:
      return "exact";
    case Provenance::ls:
      return "ls";
    case Provenance::drn_style:
      return "drn_style";
  }
  return "?";
}

Provenance parse_provenance(std::string_view name) {
  for (const Provenance p : {Provenance::exact, Provenance::ls, Provenance::drn_style}) {
    if (name == provenance_name(p)) return p;
  }
  throw ValidationError(fmt::format("unknown reference provenance '{}' (expected exact, ls or drn_style)", name));
}

void ReferencePair::validate(int rows, int cols) const {
  if (x_ref.empty() || x_ref.size() != h_ref.size()) {
    throw DimensionError(fmt::format("reference pair: {} X_Ref vs {} H_Ref matrices", x_ref.size(), h_ref.size()));
  }
  for (std::size_t k = 0; k < x_ref.size(); ++k) {
    require_shape(x_ref[k], rows, cols, fmt::format("X_Ref[{}]", k));
    require_shape(h_ref[k], rows, cols, fmt::format("H_Ref[{}]", k));
  }
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError(fmt::format("learning_rate must be > 0, got {}", learning_rate));
  if (batch_size < 1) throw ValidationError(fmt::format("batch_size must be >= 1, got {}", batch_size));
  if (max_epochs < 1) throw ValidationError(fmt::format("max_epochs must be >= 1, got {}", max_epochs));
  if (!(eta_threshold > 0.0)) throw ValidationError(fmt::format("eta_threshold must be > 0, got {}", eta_threshold));
  if (patience < 1) throw ValidationError(fmt::format("patience must be >= 1, got {}", patience));
}

TrainingReport train_network(nn::Model<float>& model, const TrainingSet& data, double s, const TrainingConfig& cfg,
                             Rng& rng, const EpochCallback& on_epoch) {
  cfg.validate();
  const std::size_t n = data.size();
  if (n == 0) throw ValidationError("training set is empty");
  if (data.targets.size() != n || data.channel_norm_sq.size() != n) {
    throw DimensionError("training set: inputs, targets and norms differ in length");
  }
  if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError(fmt::format("invalid scaling constant {}", s));
  const int rows = data.inputs[0].rows(), cols = data.inputs[0].cols();
  for (std::size_t i = 0; i < n; ++i) {
    require_shape(data.inputs[i], rows, cols, "training input");
    require_shape(data.targets[i], rows, cols, "training target");
    if (!(data.channel_norm_sq[i] > 0.0)) throw ValidationError(fmt::format("training sample {} has a zero channel", i));
  }

  const nn::AdamConfig adam{.learning_rate = cfg.learning_rate};
  const double s2 = s * s;
  const int plane = rows * cols;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainingReport report;
  double previous = std::numeric_limits<double>::infinity();
  int calm_epochs = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t first = 0; first < n; first += cfg.batch_size, ++batch_index) {
      const int b = static_cast<int>(std::min<std::size_t>(cfg.batch_size, n - first));
      nn::Tensor4<float> x = nn::Tensor4<float>::uninitialized(b, 2, rows, cols);
      for (int i = 0; i < b; ++i) pack_sample(data.inputs[order[first + i]], s, x, i);

      const nn::Tensor4<float> y = model.forward(x, nn::Mode::training);
      nn::Tensor4<float> dy = nn::Tensor4<float>::uninitialized(b, 2, rows, cols);
      double batch_loss = 0.0;
      for (int i = 0; i < b; ++i) {
        const std::size_t idx = order[first + i];
        const auto t = data.targets[idx].entries();
        const double denom = s2 * data.channel_norm_sq[idx];
        const float* yr = y.plane(i, 0);
        const float* yi = y.plane(i, 1);
        float* gr = dy.plane(i, 0);
        float* gi = dy.plane(i, 1);
        double sq = 0.0;
        for (int j = 0; j < plane; ++j) {
          const double dr = yr[j] - s * t[j].real();
          const double di = yi[j] - s * t[j].imag();
          sq += dr * dr + di * di;
          gr[j] = static_cast<float>(2.0 * dr / denom / b);
          gi[j] = static_cast<float>(2.0 * di / denom / b);
        }
        batch_loss += sq / denom;
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError(fmt::format("non-finite training loss at epoch {} batch {}", epoch, batch_index));
      }
      epoch_loss += batch_loss;
      model.zero_grad();
      model.backward(dy);
      try {
        nn::adam_step(model, adam);
      } catch (const NumericalError& e) {
        throw NumericalError(fmt::format("{} at epoch {} batch {}", e.what(), epoch, batch_index));
      }
    }
    const double f = epoch_loss / static_cast<double>(n);
    report.loss_curve.push_back(f);
    report.epochs_run = epoch;
    if (on_epoch) on_epoch(epoch, f);

    calm_epochs = (previous - f) / f <= cfg.eta_threshold ? calm_epochs + 1 : 0;
    previous = f;
    if (calm_epochs >= cfg.patience) {
      report.converged = true;
      break;
    }
  }
  return report;
}

nn::ModelArchitecture mismatch_architecture() { return nn::ModelArchitecture{.middle_repeats = 1, .residual_skip = false}; }

nn::ModelArchitecture drn_style_architecture(int middle_repeats) {
  return nn::ModelArchitecture{.middle_repeats = middle_repeats, .residual_skip = true};
}

TrainingSet mismatch_training_set(const std::vector<std::vector<CMatrix>>& x_train,
                                  const std::vector<std::vector<CMatrix>>& h_train, const ReferencePair& reference) {
  check_pairing(x_train, h_train);
  if (reference.num_users() != static_cast<int>(x_train.size())) {
    throw DimensionError(fmt::format("reference pair covers {} users, training data {}", reference.num_users(),
                                     x_train.size()));
  }
  reference.validate(h_train[0][0].rows(), h_train[0][0].cols());
  TrainingSet set;
  for (std::size_t k = 0; k < x_train.size(); ++k) {
    for (std::size_t t = 0; t < x_train[k].size(); ++t) {
      set.inputs.push_back(subtract(x_train[k][t], reference.x_ref[k]));
      set.targets.push_back(subtract(h_train[k][t], reference.h_ref[k]));
      set.channel_norm_sq.push_back(frobenius_norm_sq(h_train[k][t]));
    }
  }
  return set;
}

MismatchModel init_mismatch_model(const std::vector<std::vector<CMatrix>>& h_train, ReferencePair reference,
                                  Rng& rng, const nn::ModelArchitecture& arch) {
  MismatchModel m{nn::Model<float>(arch), std::move(reference), compute_scaling_constant(pooled(h_train))};
  m.net.initialize(rng);
  return m;
}

TrainingReport continue_training(MismatchModel& model, const std::vector<std::vector<CMatrix>>& x_train,
                                 const std::vector<std::vector<CMatrix>>& h_train, const TrainingConfig& cfg,
                                 Rng& rng, const EpochCallback& on_epoch) {
  const TrainingSet set = mismatch_training_set(x_train, h_train, model.reference);
  return train_network(model.net, set, model.scaling_constant, cfg, rng, on_epoch);
}

MismatchTraining train_mismatch_model(const std::vector<std::vector<CMatrix>>& x_train,
                                      const std::vector<std::vector<CMatrix>>& h_train, ReferencePair reference,
                                      const TrainingConfig& cfg, Rng& rng, const EpochCallback& on_epoch) {
  cfg.validate();
  MismatchTraining out{init_mismatch_model(h_train, std::move(reference), rng), {}};
  out.report = continue_training(out.model, x_train, h_train, cfg, rng, on_epoch);
  return out;
}

CMatrix estimate_mismatch(const MismatchModel& model, const pilot::Observation& obs) {
  return std::move(estimate_mismatch(model, std::span<const pilot::Observation>(&obs, 1)).front());
}

std::vector<CMatrix> estimate_mismatch(const MismatchModel& model, std::span<const pilot::Observation> obs) {
  const auto& ref = model.reference;
  std::vector<CMatrix> inputs;
  inputs.reserve(obs.size());
  for (const auto& o : obs) {
    if (o.user_index < 0 || o.user_index >= ref.num_users()) {
      throw ValidationError(fmt::format("observation for user {} but the reference covers {} users", o.user_index,
                                        ref.num_users()));
    }
    const CMatrix& x_ref = ref.x_ref[o.user_index];
    require_shape(o.X, x_ref.rows(), x_ref.cols(), "observation");
    inputs.push_back(subtract(o.X, x_ref));
  }
  std::vector<CMatrix> out = run_network(model.net, inputs, model.scaling_constant);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = add(out[i], ref.h_ref[obs[i].user_index]);
  return out;
}

TrainingSet drn_style_training_set(const std::vector<std::vector<CMatrix>>& x_train,
                                   const std::vector<std::vector<CMatrix>>& h_train,
                                   const pilot::ReflectionSchedule& schedule) {
  check_pairing(x_train, h_train);
  TrainingSet set;
  for (std::size_t k = 0; k < x_train.size(); ++k) {
    for (std::size_t t = 0; t < x_train[k].size(); ++t) {
      set.inputs.push_back(estimate_ls(x_train[k][t], schedule));
      set.targets.push_back(h_train[k][t]);
      set.channel_norm_sq.push_back(frobenius_norm_sq(h_train[k][t]));
    }
  }
  return set;
}

TrainingReport continue_training(DrnStyleModel& model, const std::vector<std::vector<CMatrix>>& x_train,
                                 const std::vector<std::vector<CMatrix>>& h_train,
                                 const pilot::ReflectionSchedule& schedule, const TrainingConfig& cfg, Rng& rng,
                                 const EpochCallback& on_epoch) {
  const TrainingSet set = drn_style_training_set(x_train, h_train, schedule);
  return train_network(model.net, set, model.scaling_constant, cfg, rng, on_epoch);
}

DrnStyleTraining train_drn_style_model(const std::vector<std::vector<CMatrix>>& x_train,
                                       const std::vector<std::vector<CMatrix>>& h_train,
                                       const pilot::ReflectionSchedule& schedule, const TrainingConfig& cfg,
                                       Rng& rng, const nn::ModelArchitecture& arch, const EpochCallback& on_epoch) {
  cfg.validate();
  DrnStyleTraining out{DrnStyleModel{nn::Model<float>(arch), compute_scaling_constant(pooled(h_train))}, {}};
  out.model.net.initialize(rng);
  out.report = continue_training(out.model, x_train, h_train, schedule, cfg, rng, on_epoch);
  return out;
}

CMatrix estimate_drn_style(const DrnStyleModel& model, const CMatrix& X, const pilot::ReflectionSchedule& schedule) {
  const CMatrix ls = estimate_ls(X, schedule);
  return std::move(run_network(model.net, std::span<const CMatrix>(&ls, 1), model.scaling_constant).front());
}

std::vector<CMatrix> estimate_drn_style(const DrnStyleModel& model, std::span<const pilot::Observation> obs,
                                        const pilot::ReflectionSchedule& schedule) {
  std::vector<CMatrix> inputs;
  inputs.reserve(obs.size());
  for (const auto& o : obs) inputs.push_back(estimate_ls(o.X, schedule));
  return run_network(model.net, inputs, model.scaling_constant);
}

ReferencePair make_reference_pair(Provenance provenance, std::vector<CMatrix> x_ref,
                                  const std::vector<CMatrix>& h_true_ref, const pilot::ReflectionSchedule& schedule,
                                  const DrnStyleModel* drn) {
  if (x_ref.size() != h_true_ref.size()) {
    throw DimensionError(fmt::format("reference: {} observations vs {} channels", x_ref.size(), h_true_ref.size()));
  }
  ReferencePair pair{provenance, std::move(x_ref), {}};
  for (std::size_t k = 0; k < pair.x_ref.size(); ++k) {
    switch (provenance) {
      case Provenance::exact:
        pair.h_ref.push_back(h_true_ref[k]);
        break;
      case Provenance::ls:
        pair.h_ref.push_back(estimate_ls(pair.x_ref[k], schedule));
        break;
      case Provenance::drn_style:
        if (drn == nullptr) throw ValidationError("drn_style reference needs a trained DRN-style model");
        pair.h_ref.push_back(estimate_drn_style(*drn, pair.x_ref[k], schedule));
        break;
    }
  }
  return pair;
}

}  // namespace irsce::est
