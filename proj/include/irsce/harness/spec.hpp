// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irsce/channel/channel.hpp"
#include "irsce/core/config.hpp"
#include "irsce/estimation/estimation.hpp"

namespace irsce::harness {

enum class Method { ls, drn_style, mismatch };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

/// One experiment, read from an INI file with the sections [scenario],
/// [system], [geometry], [training] and [experiment]. Every field has a
/// default; unknown sections or keys are rejected.
struct ExperimentSpec {
  std::string scenario = "desk";

  // [system]
  int num_users = 2;
  int num_bs_antennas = 4;
  int num_irs_elements = 8;
  int pilot_length = 2;
  double symbol_power = 1.0;
  double coherence_correlation = 0.4;
  std::uint64_t seed = 1;

  // [geometry]; user positions default to the reference placement
  channel::GeometrySpec geometry = channel::GeometrySpec::default_placement(2);

  // [training]
  est::TrainingConfig training;
  int drn_middle_repeats = 3;

  // [experiment]
  std::vector<double> snr_sweep_db{-5, 0, 5, 10, 15};
  int n_train = 2000;
  int n_test = 500;
  std::vector<Method> estimators{Method::ls, Method::drn_style, Method::mismatch};
  est::Provenance reference_provenance = est::Provenance::ls;
  double ablation_snr_db = 5.0;
  std::vector<est::Provenance> ablation_provenances{est::Provenance::exact, est::Provenance::ls,
                                                    est::Provenance::drn_style};
  std::vector<std::pair<int, int>> size_ablation;  // (M, N) pairs, exact reference
  double beamforming_power = 1.0;
  bool shared_r = false;
  int beamformer_rounds = 20;
  int phase_grid = 64;
  int timing_trials = 1000;
  int timing_runs = 5;
  int workers = 0;  // 0: hardware concurrency

  bool uses(Method m) const;

  /// SNR points the datasets cover: the sweep plus the ablation point.
  std::vector<double> observation_snrs() const;

  SystemConfig system_at(double snr_db) const;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

struct LoadedSpec {
  ExperimentSpec spec;
  std::string sha256;  // of the file bytes
};

/// Parses and validates. Errors name the file and the field.
LoadedSpec load_spec(const std::filesystem::path& path);
ExperimentSpec parse_spec(std::string_view text, const std::string& origin = "<string>");

std::string sha256_hex(std::string_view bytes);

/// "-5", "0", "2.5": the SNR label used in file names and CSVs.
std::string snr_label(double snr_db);

}  // namespace irsce::harness
