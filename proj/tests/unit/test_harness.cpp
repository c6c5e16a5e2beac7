// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <stdexcept>

#include "irsce/core/error.hpp"
#include "irsce/harness/csv.hpp"
#include "irsce/harness/manifest.hpp"
#include "irsce/harness/parallel.hpp"
#include "irsce/harness/pipeline.hpp"
#include "irsce/harness/spec.hpp"
#include "temp_dir.hpp"

namespace irsce::harness {
namespace {

using irsce::testing::TempDir;

std::string error_of(std::string_view text) {
  try {
    parse_spec(text, "t.ini");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(Spec, DefaultsMatchDeskScenario) {
  const ExperimentSpec s = parse_spec("");
  EXPECT_EQ(s.num_users, 2);
  EXPECT_EQ(s.num_bs_antennas, 4);
  EXPECT_EQ(s.num_irs_elements, 8);
  EXPECT_EQ(s.pilot_length, 2);
  EXPECT_DOUBLE_EQ(s.coherence_correlation, 0.4);
  EXPECT_EQ(s.snr_sweep_db, (std::vector<double>{-5, 0, 5, 10, 15}));
  EXPECT_EQ(s.n_train, 2000);
  EXPECT_EQ(s.estimators.size(), 3u);
  EXPECT_EQ(s.drn_middle_repeats, 3);
  EXPECT_EQ(s.timing_trials, 1000);
}

TEST(Spec, ParsesEverySectionKind) {
  const ExperimentSpec s = parse_spec(R"(
[scenario]
name = t
[system]
num_users = 1
num_bs_antennas = 8
pilot_length = 4
seed = 18446744073709551615
[geometry]
user_positions = 1,2,3
normalize_gain = no
[training]
learning_rate = 0.01
[experiment]
snr_sweep_db = -2.5, 7
estimators = ls, mismatch
ablation_provenances = exact
size_ablation = 4x8, 16x32
shared_r = true
)");
  EXPECT_EQ(s.scenario, "t");
  EXPECT_EQ(s.num_users, 1);
  EXPECT_EQ(s.seed, 18446744073709551615ULL);
  ASSERT_EQ(s.geometry.user_positions.size(), 1u);
  EXPECT_DOUBLE_EQ(s.geometry.user_positions[0][2], 3.0);
  EXPECT_FALSE(s.geometry.normalize_gain);
  EXPECT_DOUBLE_EQ(s.training.learning_rate, 0.01);
  EXPECT_EQ(s.snr_sweep_db, (std::vector<double>{-2.5, 7}));
  EXPECT_EQ(s.estimators, (std::vector<Method>{Method::ls, Method::mismatch}));
  EXPECT_TRUE(s.uses(Method::mismatch));
  EXPECT_FALSE(s.uses(Method::drn_style));
  EXPECT_EQ(s.ablation_provenances, std::vector<est::Provenance>{est::Provenance::exact});
  EXPECT_EQ(s.size_ablation, (std::vector<std::pair<int, int>>{{4, 8}, {16, 32}}));
  EXPECT_TRUE(s.shared_r);
}

TEST(Spec, RejectsUnknownKeysAndSections) {
  EXPECT_NE(error_of("[system]\nnum_user = 2\n").find("unknown key 'system.num_user'"), std::string::npos);
  EXPECT_NE(error_of("[sytem]\nnum_users = 2\n").find("unknown section [sytem]"), std::string::npos);
  EXPECT_NE(error_of("num_users = 2\n").find("must sit inside a section"), std::string::npos);
}

TEST(Spec, ErrorsNameFieldAndValue) {
  const std::string e = error_of("[system]\nnum_users = two\n");
  EXPECT_NE(e.find("t.ini"), std::string::npos);
  EXPECT_NE(e.find("system.num_users"), std::string::npos);
  EXPECT_NE(e.find("two"), std::string::npos);

  EXPECT_NE(error_of("[experiment]\nn_train = 0\n").find("experiment.n_train"), std::string::npos);
  EXPECT_NE(error_of("[system]\npilot_length = 1\n").find("system.pilot_length"), std::string::npos);
  EXPECT_NE(error_of("[experiment]\nestimators = ls, cnn\n").find("cnn"), std::string::npos);
  EXPECT_NE(error_of("[experiment]\nsnr_sweep_db = 0, 0\n").find("duplicates"), std::string::npos);
  EXPECT_NE(error_of("[experiment]\ntiming_trials = 99\n").find("experiment.timing_trials"), std::string::npos);
  EXPECT_NE(error_of("[system]\ncoherence_correlation = 1.5\n").find("system.coherence_correlation"),
            std::string::npos);
}

TEST(Spec, SystemAtSetsNoise) {
  const ExperimentSpec s = parse_spec("");
  const SystemConfig cfg = s.system_at(10.0);
  EXPECT_NEAR(cfg.noise_variance, 0.1, 1e-15);
  EXPECT_EQ(cfg.num_subframes, 9);
}

TEST(Spec, ObservationSnrsAddAblationPoint) {
  ExperimentSpec s = parse_spec("[experiment]\nsnr_sweep_db = -5, 0\nablation_snr_db = 5\n");
  EXPECT_EQ(s.observation_snrs(), (std::vector<double>{-5, 0, 5}));
  s = parse_spec("[experiment]\nsnr_sweep_db = -5, 5\nablation_snr_db = 5\n");
  EXPECT_EQ(s.observation_snrs(), (std::vector<double>{-5, 5}));
}

TEST(Spec, LoadHashesFileBytes) {
  TempDir dir;
  const auto path = dir / "a.ini";
  std::ofstream(path) << "[system]\nseed = 3\n";
  const LoadedSpec loaded = load_spec(path);
  EXPECT_EQ(loaded.spec.seed, 3u);
  EXPECT_EQ(loaded.sha256, sha256_hex("[system]\nseed = 3\n"));
  EXPECT_THROW(load_spec(dir / "missing.ini"), ValidationError);
}

TEST(Sha256, KnownDigests) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Labels, SnrAndFileNames) {
  EXPECT_EQ(snr_label(-5), "-5");
  EXPECT_EQ(snr_label(0), "0");
  EXPECT_EQ(snr_label(2.5), "2.5");
  EXPECT_EQ(files::observations_train(-5), "obs_train_snr-5.irso");
  EXPECT_EQ(files::observations_test(10), "obs_test_snr10.irso");
  EXPECT_EQ(files::checkpoint(Method::mismatch, 0), "mismatch_snr0.irsm");
  EXPECT_EQ(files::loss_curve(Method::drn_style, 15), "loss_drn_style_snr15.csv");
  EXPECT_EQ(parse_method("drn_style"), Method::drn_style);
  EXPECT_THROW(parse_method("cnn"), ValidationError);
}

TEST(Csv, SixSignificantDigits) {
  EXPECT_EQ(format_cell(0.0), "0");
  EXPECT_EQ(format_cell(1.0), "1");
  EXPECT_EQ(format_cell(3.14159265), "3.14159");
  EXPECT_EQ(format_cell(123456789.0), "1.23457e+08");
  EXPECT_EQ(format_cell(-0.000123456789), "-0.000123457");
  EXPECT_EQ(format_cell(42LL), "42");
  EXPECT_EQ(format_cell(std::string("a,b")), "\"a,b\"");
  EXPECT_EQ(format_cell(std::string("q\"")), "\"q\"\"\"");
}

TEST(Csv, TableRoundTrip) {
  CsvTable t({"method", "n", "value"});
  t.add_row({std::string("ls"), 3LL, 0.5});
  t.add_row({std::string("mismatch"), 4LL, 1e-7});
  EXPECT_EQ(t.str(), "method,n,value\nls,3,0.5\nmismatch,4,1e-07\n");
  EXPECT_THROW(t.add_row({std::string("x")}), ValidationError);

  TempDir dir;
  t.write(dir / "t.csv");
  const CsvData d = read_csv(dir / "t.csv");
  EXPECT_EQ(d.header, t.header());
  ASSERT_EQ(d.rows.size(), 2u);
  EXPECT_EQ(d.rows[1][d.column("value")], "1e-07");
  EXPECT_THROW(d.column("nope"), FormatError);
  EXPECT_THROW(read_csv(dir / "none.csv"), FormatError);
}

TEST(Manifest, RoundTripAndMismatch) {
  TempDir dir;
  EXPECT_THROW(
      {
        try {
          Manifest::load(dir.path());
        } catch (const ValidationError& e) {
          EXPECT_NE(std::string(e.what()).find("dataset not found"), std::string::npos);
          throw;
        }
      },
      ValidationError);

  Manifest m("smoke", "abc", 7);
  m.record("results.csv", "sweep");
  m.save(dir.path());
  const Manifest back = Manifest::load(dir.path());
  EXPECT_EQ(back.spec_sha256(), "abc");
  EXPECT_EQ(back.seed(), 7u);
  EXPECT_EQ(back.files().at("results.csv"), "sweep");
  EXPECT_NO_THROW(back.require_match("abc", 7));
  EXPECT_THROW(back.require_match("abd", 7), ValidationError);
  EXPECT_THROW(back.require_match("abc", 8), ValidationError);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  for (const int workers : {1, 2, 5}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  EXPECT_GE(resolve_workers(0), 1);
  EXPECT_EQ(resolve_workers(3), 3);
}

TEST(Parallel, RethrowsTaskError) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 4) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Complexity, LsBelowCnnAtDeskSizes) {
  EXPECT_NEAR(ls_complexity(4, 9), 36 * std::log2(36.0), 1e-12);
  nn::ModelArchitecture mismatch;
  nn::ModelArchitecture drn{.middle_repeats = 3, .residual_skip = true};
  // 4 x 9 input, 3 blocks of (2->64, 4 x 64->64, 64->2) 3x3 convs
  EXPECT_DOUBLE_EQ(cnn_complexity(mismatch, 4, 8), 36.0 * 3 * (2 * 9 * 64 + 4 * 64 * 9 * 64 + 64 * 9 * 2));
  EXPECT_LT(ls_complexity(4, 9), cnn_complexity(mismatch, 4, 8));
  EXPECT_LT(cnn_complexity(mismatch, 4, 8), cnn_complexity(drn, 4, 8));
}

}  // namespace
}  // namespace irsce::harness
