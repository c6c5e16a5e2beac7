// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "irsce/channel/channel.hpp"
#include "irsce/core/error.hpp"
#include "irsce/estimation/estimation.hpp"
#include "irsce/evaluation/evaluation.hpp"

namespace irsce::est {
namespace {

CMatrix random_matrix(int r, int c, Rng& rng) {
  CMatrix m(r, c);
  for (auto& z : m.entries()) z = rng.complex_normal();
  return m;
}

nn::ModelArchitecture narrow(int repeats = 1, bool skip = false) {
  nn::ModelArchitecture a;
  a.middle_repeats = repeats;
  a.residual_skip = skip;
  a.width = 16;
  return a;
}

// Desk-sized channels and their observations at one SNR, for both splits.
struct Scenario {
  SystemConfig cfg;
  pilot::PilotMatrix pilots;
  pilot::ReflectionSchedule sched;
  channel::Dataset train, test;
  std::vector<std::vector<CMatrix>> h_train, x_train, h_test, x_test;
  std::vector<CMatrix> x_ref, h_ref_true;
};

std::vector<std::vector<CMatrix>> channels_of(const channel::Dataset& ds) {
  std::vector<std::vector<CMatrix>> out(ds.num_users);
  for (int k = 0; k < ds.num_users; ++k) {
    for (const auto& s : ds.samples[k]) out[k].push_back(s.H);
  }
  return out;
}

std::vector<std::vector<CMatrix>> observe_all(const Scenario& sc, const std::vector<std::vector<CMatrix>>& h, Rng& rng) {
  std::vector<std::vector<CMatrix>> out(h.size());
  for (std::size_t t = 0; t < h[0].size(); ++t) {
    std::vector<CMatrix> frame;
    for (const auto& user : h) frame.push_back(user[t]);
    for (const auto& o : pilot::observe(frame, sc.pilots, sc.sched, sc.cfg, rng)) out[o.user_index].push_back(o.X);
  }
  return out;
}

Scenario make_scenario(double snr_db, int n_train, int n_test, std::uint64_t seed) {
  Scenario sc;
  sc.cfg = config_from_snr(2, 4, 8, 2, snr_db, 0.4, seed);
  sc.pilots = pilot::make_pilots(sc.cfg);
  sc.sched = pilot::make_schedule(sc.cfg);
  Rng rng(seed);
  sc.train = channel::make_dataset(sc.cfg, channel::GeometrySpec::default_placement(2), n_train, rng);
  sc.test = channel::continue_dataset(sc.train, 0.4, n_test, rng);
  sc.h_train = channels_of(sc.train);
  sc.h_test = channels_of(sc.test);
  sc.x_train = observe_all(sc, sc.h_train, rng);
  sc.x_test = observe_all(sc, sc.h_test, rng);
  std::vector<CMatrix> ref;
  for (const auto& s : sc.train.reference) ref.push_back(s.H);
  sc.h_ref_true = ref;
  const auto obs = pilot::observe(ref, sc.pilots, sc.sched, sc.cfg, rng);
  for (const auto& o : obs) sc.x_ref.push_back(o.X);
  return sc;
}

TEST(LeastSquares, HandExample) {
  const pilot::ReflectionSchedule sched{CMatrix(2, 2, {1, 1, 1, -1})};
  const CMatrix h = estimate_ls(CMatrix(1, 2, {5, -1}), sched);
  EXPECT_NEAR(std::abs(h(0, 0) - cdouble(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h(0, 1) - cdouble(3.0)), 0.0, 1e-15);
}

TEST(LeastSquares, NoiselessIsExact) {
  SystemConfig cfg = config_from_snr(2, 4, 8, 2, 0.0, 0.4, 1);
  cfg.noise_variance = 0.0;
  const auto sched = pilot::make_schedule(cfg);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<CMatrix> h{random_matrix(4, 9, rng), random_matrix(4, 9, rng)};
    const auto obs = pilot::observe(h, pilot::make_pilots(cfg), sched, cfg, rng);
    for (int k = 0; k < 2; ++k) EXPECT_LT(eval::nmse(h[k], estimate_ls(obs[k].X, sched)), 1e-20);
  }
}

TEST(LeastSquares, NoiseOnlyErrorPower) {
  const SystemConfig cfg = config_from_snr(2, 4, 8, 2, 0.0, 0.4, 1);  // sigma^2 = 1
  const auto sched = pilot::make_schedule(cfg);
  Rng rng(3);
  const std::vector<CMatrix> zero{CMatrix(4, 9), CMatrix(4, 9)};
  double total = 0.0;
  constexpr int kTrials = 2000;
  for (int t = 0; t < kTrials; ++t) {
    const auto obs = pilot::observe(zero, pilot::make_pilots(cfg), sched, cfg, rng);
    total += frobenius_norm_sq(estimate_ls(obs[0].X, sched));
  }
  const double expected = 4.0 * 1.0 / (1.0 * 2.0);  // M sigma^2 / (P_t L)
  EXPECT_NEAR(total / kTrials, expected, 0.1 * expected);
}

TEST(LeastSquares, RejectsWrongShape) {
  const pilot::ReflectionSchedule sched{CMatrix(2, 2, {1, 1, 1, -1})};
  EXPECT_THROW(estimate_ls(CMatrix(1, 3), sched), DimensionError);
}

TEST(TensorPacking, Examples) {
  const auto t = complex_to_tensor(CMatrix(1, 1, {{1, 2}}), 1.0);
  EXPECT_EQ(t.at(0, 0, 0, 0), 1.0f);
  EXPECT_EQ(t.at(0, 1, 0, 0), 2.0f);
  const auto u = complex_to_tensor(CMatrix(1, 1, {{0.3, -0.4}}), 10.0);
  EXPECT_NEAR(u.at(0, 0, 0, 0), 3.0f, 1e-6f);
  EXPECT_NEAR(u.at(0, 1, 0, 0), -4.0f, 1e-6f);
}

TEST(TensorPacking, RoundTrip) {
  Rng rng(4);
  const CMatrix m = random_matrix(4, 9, rng);
  const CMatrix back = tensor_to_complex(complex_to_tensor(m, 37.0), 37.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_LT(std::abs(back.entries()[i] - m.entries()[i]) / std::abs(m.entries()[i]), 1e-6);
  }
  EXPECT_THROW(complex_to_tensor(m, 0.0), ValidationError);
}

TEST(ScalingConstant, Examples) {
  auto filled = [](std::vector<cdouble> values) {
    CMatrix m(1, static_cast<int>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) m(0, static_cast<int>(i)) = values[i];
    return std::vector<CMatrix>{m};
  };
  EXPECT_NEAR(compute_scaling_constant(filled({1e-4, {0, -1e-4}, {-1e-4, 0}})), 1e4, 1e-6);
  EXPECT_NEAR(compute_scaling_constant(filled({1.0, {0, 1}, {0.6, 0.8}})), 1.0, 1e-12);
  EXPECT_NEAR(compute_scaling_constant(filled({0.01, 0.03, {0, 0.02}})), 50.0, 1e-9);
  EXPECT_THROW(compute_scaling_constant({}), ValidationError);
  EXPECT_THROW(compute_scaling_constant(filled({0.0, 0.0})), ValidationError);
}

TEST(Provenance, Names) {
  for (const Provenance p : {Provenance::exact, Provenance::ls, Provenance::drn_style}) {
    EXPECT_EQ(parse_provenance(provenance_name(p)), p);
  }
  EXPECT_THROW(parse_provenance("oracle"), ValidationError);
}

TEST(TrainingConfig, Validation) {
  TrainingConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ReferencePair, Provenances) {
  const Scenario sc = make_scenario(5.0, 4, 1, 5);
  const auto exact = make_reference_pair(Provenance::exact, sc.x_ref, sc.h_ref_true, sc.sched);
  EXPECT_EQ(exact.h_ref[1], sc.h_ref_true[1]);
  const auto ls = make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched);
  EXPECT_EQ(ls.h_ref[0], estimate_ls(sc.x_ref[0], sc.sched));
  EXPECT_THROW(make_reference_pair(Provenance::drn_style, sc.x_ref, sc.h_ref_true, sc.sched), ValidationError);
}

TEST(MismatchTrainingSet, Differences) {
  const Scenario sc = make_scenario(5.0, 3, 1, 6);
  const auto ref = make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched);
  const TrainingSet set = mismatch_training_set(sc.x_train, sc.h_train, ref);
  ASSERT_EQ(set.size(), 6u);
  EXPECT_EQ(set.inputs[4], subtract(sc.x_train[1][1], ref.x_ref[1]));  // user-major order
  EXPECT_EQ(set.targets[4], subtract(sc.h_train[1][1], ref.h_ref[1]));
  EXPECT_DOUBLE_EQ(set.channel_norm_sq[4], frobenius_norm_sq(sc.h_train[1][1]));
}

TEST(Training, InfiniteThresholdStopsAfterPatience) {
  const Scenario sc = make_scenario(5.0, 40, 1, 7);
  auto model = init_mismatch_model(sc.h_train, make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched),
                                   *std::make_unique<Rng>(1), narrow());
  TrainingConfig cfg;
  cfg.batch_size = 16;
  cfg.eta_threshold = std::numeric_limits<double>::infinity();
  cfg.patience = 3;
  Rng rng(2);
  const TrainingReport r = continue_training(model, sc.x_train, sc.h_train, cfg, rng);
  EXPECT_EQ(r.epochs_run, 3);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.loss_curve.size(), 3u);
}

TEST(Training, MaxEpochsBoundsTheRun) {
  const Scenario sc = make_scenario(5.0, 40, 1, 8);
  auto model = init_mismatch_model(sc.h_train, make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched),
                                   *std::make_unique<Rng>(1), narrow());
  TrainingConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 2;
  cfg.eta_threshold = 1e-12;
  Rng rng(3);
  int callbacks = 0;
  const auto r = continue_training(model, sc.x_train, sc.h_train, cfg, rng, [&](int, double) { ++callbacks; });
  EXPECT_EQ(r.epochs_run, 2);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(callbacks, 2);
  EXPECT_EQ(model.net.step(), 10u);  // 2 users x 40 samples, 16 per batch, twice
}

TEST(Training, LossDecreases) {
  const Scenario sc = make_scenario(5.0, 400, 1, 9);
  auto model = init_mismatch_model(sc.h_train, make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched),
                                   *std::make_unique<Rng>(1), narrow());
  TrainingConfig cfg;
  cfg.batch_size = 32;
  cfg.max_epochs = 6;
  cfg.learning_rate = 1e-3;
  Rng rng(4);
  const auto r = continue_training(model, sc.x_train, sc.h_train, cfg, rng);
  EXPECT_LT(r.loss_curve.back(), r.loss_curve.front());
}

TEST(Training, ZeroMismatchDataLearnsZero) {
  const Scenario sc = make_scenario(5.0, 1, 1, 10);
  const auto ref = make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched);
  std::vector<std::vector<CMatrix>> x(2), h(2);
  for (int k = 0; k < 2; ++k) {
    x[k].assign(64, ref.x_ref[k]);
    h[k].assign(64, ref.h_ref[k]);
  }
  Rng init(1);
  auto model = init_mismatch_model(h, ref, init, narrow());
  TrainingConfig cfg;
  cfg.batch_size = 32;
  cfg.max_epochs = 5;
  Rng rng(5);
  const auto r = continue_training(model, x, h, cfg, rng);
  EXPECT_LT(r.loss_curve.back(), 1e-3);
  const CMatrix est = estimate_mismatch(model, pilot::Observation{1, ref.x_ref[1], std::nullopt});
  EXPECT_LT(frobenius_norm(subtract(est, ref.h_ref[1])) / frobenius_norm(ref.h_ref[1]), 1e-2);
}

TEST(Training, NonFiniteLossIsReported) {
  const Scenario sc = make_scenario(5.0, 8, 1, 11);
  auto x = sc.x_train;
  x[0][3](0, 0) = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  auto model = init_mismatch_model(sc.h_train, make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched),
                                   *std::make_unique<Rng>(1), narrow());
  TrainingConfig cfg;
  cfg.batch_size = 4;
  Rng rng(6);
  try {
    continue_training(model, x, sc.h_train, cfg, rng);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
}

TEST(MismatchEstimator, ReferenceInputGivesReferencePlusOffset) {
  const Scenario sc = make_scenario(5.0, 4, 1, 12);
  Rng init(1);
  const auto model =
      init_mismatch_model(sc.h_train, make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched), init,
                          narrow());
  const CMatrix est = estimate_mismatch(model, pilot::Observation{0, sc.x_ref[0], std::nullopt});
  const auto f0 = model.net.infer(complex_to_tensor(CMatrix(4, 9), model.scaling_constant));
  const CMatrix expected = add(model.reference.h_ref[0], tensor_to_complex(f0, model.scaling_constant));
  EXPECT_EQ(est, expected);
}

TEST(MismatchEstimator, DeterministicAndBatchConsistent) {
  const Scenario sc = make_scenario(5.0, 4, 6, 13);
  Rng init(1);
  const auto model =
      init_mismatch_model(sc.h_train, make_reference_pair(Provenance::ls, sc.x_ref, sc.h_ref_true, sc.sched), init,
                          narrow());
  std::vector<pilot::Observation> obs;
  for (int t = 0; t < 6; ++t) obs.push_back({t % 2, sc.x_test[t % 2][t], std::nullopt});
  const auto batch = estimate_mismatch(model, obs);
  for (int t = 0; t < 6; ++t) {
    EXPECT_EQ(estimate_mismatch(model, obs[t]), batch[t]);
    EXPECT_EQ(estimate_mismatch(model, obs[t]), estimate_mismatch(model, obs[t]));
  }
  EXPECT_THROW(estimate_mismatch(model, pilot::Observation{2, sc.x_ref[0], std::nullopt}), ValidationError);
}

TEST(DrnStyle, ArchitectureIsLarger) {
  EXPECT_GT(nn::Model<float>(drn_style_architecture()).parameter_count(),
            nn::Model<float>(mismatch_architecture()).parameter_count());
  EXPECT_TRUE(drn_style_architecture().residual_skip);
  EXPECT_EQ(drn_style_architecture().middle_repeats, 3);
  EXPECT_FALSE(mismatch_architecture().residual_skip);
}

TEST(DrnStyle, TrainingReducesLoss) {
  const Scenario sc = make_scenario(10.0, 300, 10, 14);
  TrainingConfig cfg;
  cfg.batch_size = 32;
  cfg.max_epochs = 6;
  cfg.learning_rate = 1e-3;
  Rng rng(7);
  const auto trained = train_drn_style_model(sc.x_train, sc.h_train, sc.sched, cfg, rng, narrow(3, true));
  ASSERT_GE(trained.report.loss_curve.size(), 2u);
  EXPECT_LT(trained.report.loss_curve.back(), trained.report.loss_curve.front());
  for (int t = 0; t < 10; ++t) {
    const CMatrix est = estimate_drn_style(trained.model, sc.x_test[1][t], sc.sched);
    EXPECT_EQ(est.rows(), sc.h_test[1][t].rows());
    EXPECT_EQ(est.cols(), sc.h_test[1][t].cols());
    EXPECT_TRUE(std::isfinite(eval::nmse(sc.h_test[1][t], est)));
  }
}

TEST(DrnStyle, Deterministic) {
  const Scenario sc = make_scenario(10.0, 8, 1, 15);
  TrainingConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 1;
  Rng rng(8);
  const auto trained = train_drn_style_model(sc.x_train, sc.h_train, sc.sched, cfg, rng, narrow(3, true));
  const CMatrix& x = sc.x_test[0][0];
  EXPECT_EQ(estimate_drn_style(trained.model, x, sc.sched), estimate_drn_style(trained.model, x, sc.sched));
}

}  // namespace
}  // namespace irsce::est
