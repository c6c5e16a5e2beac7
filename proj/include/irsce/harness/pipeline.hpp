// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "irsce/harness/spec.hpp"
#include "irsce/nn/model.hpp"

namespace irsce::harness {

struct RunOptions {
  std::filesystem::path spec_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the spec's seed
  bool resume = false;                // train: continue from existing checkpoints
  std::function<void(const std::string&)> log;
};

// Output files, all inside the --out directory.
namespace files {
inline constexpr char kChannelsTrain[] = "channels_train.irsd";
inline constexpr char kChannelsTest[] = "channels_test.irsd";
inline constexpr char kResults[] = "results.csv";
inline constexpr char kResultsDat[] = "results.dat";
inline constexpr char kAblation[] = "ablation.csv";
inline constexpr char kAblationDat[] = "ablation.dat";
inline constexpr char kTiming[] = "timing.csv";
inline constexpr char kTrainLog[] = "train_log.csv";
inline constexpr char kAblationTrainLog[] = "ablation_train_log.csv";

std::string observations_train(double snr_db);  // obs_train_snr{X}.irso
std::string observations_test(double snr_db);   // obs_test_snr{X}.irso
std::string checkpoint(Method m, double snr_db);  // {method}_snr{X}.irsm
std::string ablation_checkpoint(est::Provenance p, double snr_db);
std::string loss_curve(Method m, double snr_db);  // loss_{method}_snr{X}.csv
}  // namespace files

/// Channel datasets (train, then test continuing the same chain) and the
/// de-spread observations at every sweep and ablation SNR, plus manifest.json.
void run_generate(const RunOptions& opt);

/// One checkpoint and loss curve per learned estimator and sweep SNR.
void run_train(const RunOptions& opt);

/// results.csv: NMSE, SE and time per SNR and method, plus a perfect-CSI row.
void run_sweep(const RunOptions& opt);

/// ablation.csv: mismatch NMSE per reference provenance at the ablation SNR,
/// then the optional (M, N) size study with the exact reference.
void run_ablate_reference(const RunOptions& opt);

/// timing.csv: per-CSI inference time per method and run, with parameter
/// counts and complexity estimates.
void run_bench(const RunOptions& opt);

/// M C log2(M C): the LS complexity expression.
double ls_complexity(int m, int c);

/// M (N+1) Σ_l n_l s² n_{l+1} over every conv layer: multiply-accumulates of
/// one forward pass on an M x (N+1) input.
double cnn_complexity(const nn::ModelArchitecture& arch, int m, int n);

}  // namespace irsce::harness
