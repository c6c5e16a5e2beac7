// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion 1-9. Criteria 3-7 run
// the desk scenario end to end (about 1.5 h on one core); 8 runs the smoke
// scenario twice. Exit status is 0 only when every selected criterion passes.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "irsce/channel/channel.hpp"
#include "irsce/channel/dataset_io.hpp"
#include "irsce/estimation/estimation.hpp"
#include "irsce/evaluation/evaluation.hpp"
#include "irsce/harness/csv.hpp"
#include "irsce/harness/pipeline.hpp"
#include "irsce/nn/checkpoint.hpp"
#include "irsce/pilot/protocol.hpp"

namespace fs = std::filesystem;
using namespace irsce;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Verdict& v) {
  fmt::print("[{}] {} {}: {}\n", v.pass ? "PASS" : "FAIL", id, title, v.detail);
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

CMatrix random_matrix(int r, int c, Rng& rng) {
  CMatrix m(r, c);
  for (auto& z : m.entries()) z = rng.complex_normal();
  return m;
}

// ---- 1 ------------------------------------------------------------------------
Verdict protocol_oracle() {
  const auto t0 = Clock::now();
  SystemConfig cfg = config_from_snr(2, 4, 8, 2, 0.0, 0.4, 1);
  cfg.noise_variance = 0.0;
  const auto pilots = pilot::make_pilots(cfg);
  const auto sched = pilot::make_schedule(cfg);
  Rng rng(101);
  double worst_nmse = 0.0, worst_leak = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<CMatrix> H{random_matrix(4, 9, rng), random_matrix(4, 9, rng)};
    const auto obs = pilot::observe(H, pilots, sched, cfg, rng);
    for (int k = 0; k < 2; ++k) worst_nmse = std::max(worst_nmse, eval::nmse(H[k], est::estimate_ls(obs[k].X, sched)));
    // Only user j transmits: the other user's observation must vanish.
    for (int j = 0; j < 2; ++j) {
      std::vector<CMatrix> solo{CMatrix(4, 9), CMatrix(4, 9)};
      solo[j] = H[j];
      const auto o = pilot::observe(solo, pilots, sched, cfg, rng);
      const double leak = frobenius_norm(o[1 - j].X) / frobenius_norm(o[j].X);
      worst_leak = std::max(worst_leak, leak);
    }
  }
  const double secs = seconds_since(t0);
  return {worst_nmse < 1e-18 && worst_leak < 1e-10 && secs < 5.0,
          fmt::format("max NMSE {:.3g} (< 1e-18), max leakage {:.3g} (< 1e-10), {:.2f} s (< 5 s)", worst_nmse,
                      worst_leak, secs)};
}

// ---- 2 ------------------------------------------------------------------------
Verdict gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(202);
  testing::GradCheckOptions opt;
  testing::GradCheckOptions model_opt;
  model_opt.h = 3e-6;
  testing::GradReport all;
  std::vector<std::string> parts;
  auto add = [&](const std::string& label, const testing::GradReport& r) {
    parts.push_back(fmt::format("{} {:.2g}", label, r.max_rel_error));
    all.merge(r);
  };
  add("conv", testing::check_conv<double>(rng, opt));
  add("bn", testing::check_batchnorm<double>(rng, opt));
  add("relu", testing::check_relu<double>(rng, opt));
  add("model(D=1)", testing::check_model<double>(est::mismatch_architecture(), rng, model_opt));
  add("model(D=3,skip)", testing::check_model<double>(est::drn_style_architecture(), rng, model_opt));
  const double secs = seconds_since(t0);
  std::string joined;
  for (const auto& p : parts) joined += (joined.empty() ? "" : ", ") + p;
  return {all.max_rel_error < 1e-6 && secs < 60.0,
          fmt::format("max rel error {:.3g} (< 1e-6) over {} entries [{}], worst {}, {} kink-straddling stencils "
                      "skipped, {:.1f} s (< 60 s)",
                      all.max_rel_error, all.checked, joined, all.worst_name, all.skipped, secs)};
}

// ---- 3-7 ----------------------------------------------------------------------

struct Row {
  double nmse, se, time_ms;
};

std::map<std::pair<double, std::string>, Row> read_results(const fs::path& path) {
  const auto csv = harness::read_csv(path);
  const int c_snr = csv.column("snr_db"), c_m = csv.column("method"), c_n = csv.column("mean_nmse"),
            c_se = csv.column("mean_se_bps_hz"), c_t = csv.column("mean_time_ms");
  std::map<std::pair<double, std::string>, Row> out;
  for (const auto& r : csv.rows) out[{std::stod(r[c_snr]), r[c_m]}] = {std::stod(r[c_n]), std::stod(r[c_se]), std::stod(r[c_t])};
  return out;
}

struct DeskRun {
  fs::path dir;
  harness::ExperimentSpec spec;
  double generate_seconds = 0.0;
  std::map<std::pair<std::string, double>, double> train_seconds;  // (method, snr)
};

harness::RunOptions options(const fs::path& spec, const fs::path& out, bool verbose) {
  harness::RunOptions o;
  o.spec_path = spec;
  o.out_dir = out;
  if (verbose) o.log = [](const std::string& line) { fmt::print(stderr, "  | {}\n", line); };
  return o;
}

Verdict nmse_trend(const DeskRun& run, double eval_seconds_ls_mm) {
  const auto rows = read_results(run.dir / harness::files::kResults);
  bool ok = true;
  std::string detail;
  double total = run.generate_seconds + eval_seconds_ls_mm;
  for (const double snr : {-5.0, 0.0}) {
    const auto ls = rows.find({snr, "ls"});
    const auto mm = rows.find({snr, "mismatch"});
    if (ls == rows.end() || mm == rows.end()) return {false, fmt::format("missing results at {} dB", snr)};
    const double ratio = mm->second.nmse / ls->second.nmse;
    ok = ok && ratio < 0.5;
    detail += fmt::format("{} dB: mismatch {:.4g} vs LS {:.4g} (ratio {:.3g} < 0.5); ", snr, mm->second.nmse,
                          ls->second.nmse, ratio);
    total += run.train_seconds.at({"mismatch", snr});
  }
  ok = ok && total < 15 * 60;
  detail += fmt::format("n_test {} instances x {} users; runtime {:.1f} min (< 15 min: data generation, training of "
                        "the two mismatch models, evaluation)",
                        run.spec.n_test, run.spec.num_users, total / 60.0);
  return {ok, detail};
}

Verdict monotonicity(const DeskRun& run) {
  const auto rows = read_results(run.dir / harness::files::kResults);
  bool ok = true;
  std::string detail;
  for (const std::string method : {"ls", "drn_style", "mismatch"}) {
    std::vector<double> nmse;
    for (const double snr : run.spec.snr_sweep_db) nmse.push_back(rows.at({snr, method}).nmse);
    int inversions = 0;
    bool small = true;
    for (std::size_t i = 1; i < nmse.size(); ++i) {
      if (nmse[i] > nmse[i - 1]) {
        ++inversions;
        small = small && nmse[i] <= 1.05 * nmse[i - 1];
      }
    }
    const bool good = inversions == 0 || (inversions == 1 && small);
    ok = ok && good;
    std::string seq;
    for (const double v : nmse) seq += fmt::format("{}{:.4g}", seq.empty() ? "" : " ", v);
    detail += fmt::format("{} [{}] inversions {}{}; ", method, seq, inversions, good ? "" : " (FAIL)");
  }
  return {ok, detail};
}

Verdict se_trend(const DeskRun& run) {
  const auto rows = read_results(run.dir / harness::files::kResults);
  bool ok = true;
  std::string detail;
  for (const double snr : run.spec.snr_sweep_db) {
    const double perfect = rows.at({snr, "perfect"}).se;
    for (const std::string method : {"ls", "drn_style", "mismatch"}) {
      const double se = rows.at({snr, method}).se;
      if (perfect < 0.98 * se) {
        ok = false;
        detail += fmt::format("{} dB {} SE {:.4g} exceeds perfect {:.4g}; ", snr, method, se, perfect);
      }
    }
  }
  if (ok) detail += "perfect-CSI SE >= every estimate at every SNR (2% tolerance); ";
  for (const double snr : {-5.0, 0.0}) {
    const double mm = rows.at({snr, "mismatch"}).se, ls = rows.at({snr, "ls"}).se;
    ok = ok && mm >= ls;
    detail += fmt::format("{} dB SE mismatch {:.4g} vs LS {:.4g}; ", snr, mm, ls);
  }
  return {ok, detail};
}

Verdict reference_ordering(const DeskRun& run) {
  const auto csv = harness::read_csv(run.dir / harness::files::kAblation);
  std::map<std::string, double> nmse;
  for (const auto& r : csv.rows) {
    if (r[0] == "reference") nmse[r[1]] = std::stod(r[5]);
  }
  if (!nmse.contains("exact") || !nmse.contains("ls") || !nmse.contains("drn_style")) {
    return {false, "ablation.csv lacks a provenance row"};
  }
  const bool ok = nmse["exact"] < nmse["ls"] && nmse["exact"] < nmse["drn_style"];
  return {ok, fmt::format("exact {:.4g}, ls {:.4g}, drn_style {:.4g} at {} dB; exact lowest: {}; ls vs drn_style "
                          "(reported only): {}",
                          nmse["exact"], nmse["ls"], nmse["drn_style"], run.spec.ablation_snr_db, ok ? "yes" : "no",
                          nmse["ls"] < nmse["drn_style"] ? "ls < drn_style" : "drn_style <= ls")};
}

Verdict timing_ordering(const DeskRun& run) {
  const auto csv = harness::read_csv(run.dir / harness::files::kTiming);
  const int c_m = csv.column("method"), c_t = csv.column("mean_ms"), c_n = csv.column("trials"),
            c_p = csv.column("parameters");
  std::map<std::string, double> sum, params;
  std::map<std::string, int> runs;
  long long min_trials = 1LL << 60;
  for (const auto& r : csv.rows) {
    sum[r[c_m]] += std::stod(r[c_t]);
    runs[r[c_m]]++;
    params[r[c_m]] = std::stod(r[c_p]);
    min_trials = std::min(min_trials, std::stoll(r[c_n]));
  }
  auto mean = [&](const std::string& m) { return sum[m] / runs[m]; };
  const double ls = mean("ls"), mm = mean("mismatch"), drn = mean("drn_style");
  const bool ok = ls < mm && mm < drn && min_trials >= 1000 && params["mismatch"] < params["drn_style"];
  return {ok, fmt::format("per-CSI ms LS {:.4g} < proposed {:.4g} < DRN-style {:.4g} (mean of {} runs x {} trials); "
                          "parameters proposed {:.0f} < DRN-style {:.0f}",
                          ls, mm, drn, runs["ls"], min_trials, params["mismatch"], params["drn_style"])};
}

// Recomputes the LS and mismatch test NMSE at -5 and 0 dB straight from the
// stored datasets and checkpoints, independently of the sweep's own
// evaluation path, and returns the elapsed time.
double recompute_nmse(const DeskRun& run, std::string* mismatch_note) {
  const auto t0 = Clock::now();
  const auto test = channel::read_matrix_set(run.dir / harness::files::kChannelsTest, channel::kChannelMagic);
  const auto rows = read_results(run.dir / harness::files::kResults);
  for (const double snr : {-5.0, 0.0}) {
    const auto obs = channel::read_matrix_set(run.dir / harness::files::observations_test(snr), channel::kObservationMagic);
    const auto ck = nn::load_checkpoint(run.dir / harness::files::checkpoint(harness::Method::mismatch, snr));
    est::MismatchModel model{ck.model, est::ReferencePair{est::Provenance::ls, ck.x_ref, ck.h_ref}, ck.scaling_constant};
    const auto sched = pilot::make_schedule(run.spec.system_at(snr));
    double ls = 0.0, mm = 0.0;
    int n = 0;
    for (int k = 0; k < test.num_users; ++k) {
      for (int t = 0; t < test.num_samples(); ++t, ++n) {
        const CMatrix& h = test.samples[k][t];
        const CMatrix& x = obs.samples[k][t];
        const CMatrix ls_est = scale(multiply(x, hermitian_transpose(sched.P)), 1.0 / sched.P.cols());
        ls += frobenius_norm_sq(subtract(ls_est, h)) / frobenius_norm_sq(h);
        mm += eval::nmse(h, est::estimate_mismatch(model, pilot::Observation{k, x, std::nullopt}));
      }
    }
    ls /= n;
    mm /= n;
    const double d_ls = std::abs(ls - rows.at({snr, "ls"}).nmse) / ls;
    const double d_mm = std::abs(mm - rows.at({snr, "mismatch"}).nmse) / mm;
    if (d_ls > 1e-5 || d_mm > 1e-5) {
      *mismatch_note += fmt::format("{} dB recomputed LS {:.6g} / mismatch {:.6g} disagree with results.csv; ", snr,
                                    ls, mm);
    }
  }
  return seconds_since(t0);
}

DeskRun run_desk(const fs::path& spec_path, const fs::path& dir, bool verbose) {
  DeskRun run;
  run.dir = dir;
  run.spec = harness::load_spec(spec_path).spec;
  fs::remove_all(dir);
  const auto opt = options(spec_path, dir, verbose);
  auto t0 = Clock::now();
  fmt::print("  running generate on {}\n", spec_path.string());
  harness::run_generate(opt);
  run.generate_seconds = seconds_since(t0);
  fmt::print("  running train ({} SNR points)\n", run.spec.snr_sweep_db.size());
  std::fflush(stdout);
  harness::run_train(opt);
  const auto log = harness::read_csv(dir / harness::files::kTrainLog);
  for (const auto& r : log.rows) run.train_seconds[{r[0], std::stod(r[2])}] = std::stod(r[6]);
  fmt::print("  running sweep\n");
  std::fflush(stdout);
  harness::run_sweep(opt);
  fmt::print("  running ablate-ref\n");
  std::fflush(stdout);
  harness::run_ablate_reference(opt);
  fmt::print("  running bench\n");
  std::fflush(stdout);
  harness::run_bench(opt);
  return run;
}

// ---- 8 ------------------------------------------------------------------------

std::string without_column(const fs::path& path, const std::string& column) {
  const auto csv = harness::read_csv(path);
  const int skip = csv.column(column);
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (static_cast<int>(i) == skip) continue;
      out += cells[i] + ",";
    }
    out += "\n";
  };
  emit(csv.header);
  for (const auto& r : csv.rows) emit(r);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Verdict determinism(const fs::path& smoke_spec, const fs::path& work, bool verbose) {
  std::array<fs::path, 2> dirs{work / "smoke_a", work / "smoke_b"};
  for (const auto& d : dirs) {
    fs::remove_all(d);
    const auto opt = options(smoke_spec, d, verbose);
    harness::run_generate(opt);
    harness::run_train(opt);
    harness::run_sweep(opt);
    harness::run_ablate_reference(opt);
  }
  const bool results_same = without_column(dirs[0] / harness::files::kResults, "mean_time_ms") ==
                            without_column(dirs[1] / harness::files::kResults, "mean_time_ms");
  const bool ablation_same = slurp(dirs[0] / harness::files::kAblation) == slurp(dirs[1] / harness::files::kAblation);
  const bool data_same = slurp(dirs[0] / harness::files::kChannelsTest) == slurp(dirs[1] / harness::files::kChannelsTest);

  // Checkpoint round trip: a trained model against its reloaded copy.
  const auto spec = harness::load_spec(smoke_spec).spec;
  const double snr = spec.snr_sweep_db.front();
  const fs::path ck_path = dirs[0] / harness::files::checkpoint(harness::Method::mismatch, snr);
  nn::Checkpoint first = nn::load_checkpoint(ck_path);
  const fs::path copy = work / "roundtrip.irsm";
  nn::save_checkpoint(copy, first.model, first.scaling_constant, first.x_ref, first.h_ref);
  nn::Checkpoint second = nn::load_checkpoint(copy);
  Rng rng(808);
  nn::Tensor4<float> x(16, 2, spec.num_bs_antennas, spec.num_irs_elements + 1);
  for (auto& v : x.values()) v = static_cast<float>(rng.normal());
  const auto y1 = first.model.infer(x);
  const auto y2 = second.model.infer(x);
  const bool outputs_same = std::equal(y1.values().begin(), y1.values().end(), y2.values().begin(),
                                       [](float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); });
  const bool files_same = slurp(ck_path) == slurp(copy);
  const bool ok = results_same && ablation_same && data_same && outputs_same && files_same;
  return {ok, fmt::format("results.csv (timing column excluded) identical: {}; ablation.csv identical: {}; datasets "
                          "identical: {}; checkpoint round trip bit-identical outputs: {}, bytes: {}",
                          results_same, ablation_same, data_same, outputs_same, files_same)};
}

// ---- 9 ------------------------------------------------------------------------
Verdict correlation_control() {
  SystemConfig cfg = config_from_snr(2, 4, 8, 2, 0.0, 0.4, 9);
  const auto geo = channel::GeometrySpec::default_placement(2);
  Rng rng(909);
  const int t = 1000;  // 1000 x 4 x 9 = 36000 entries per user
  const auto ds = channel::make_dataset(cfg, geo, t, rng);
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 2; ++k) {
    const double r = channel::lag1_correlation(ds.samples[k]);
    ok = ok && std::abs(r - 0.4) <= 0.05;
    detail += fmt::format("user {} lag-1 r = {:.4f}; ", k, r);
  }
  detail += fmt::format("{} entries per user, target 0.40 +/- 0.05", t * 4 * 9);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-9"};
  std::string desk = "scenarios/desk.ini", smoke = "scenarios/smoke.ini", work = "acceptance_work";
  std::vector<int> only;
  bool verbose = false;
  app.add_option("--desk-spec", desk, "Desk scenario spec");
  app.add_option("--smoke-spec", smoke, "Smoke scenario spec");
  app.add_option("--work", work, "Scratch directory for pipeline outputs");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_flag("--verbose", verbose, "Show pipeline progress");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9}
                                              : std::set<int>(only.begin(), only.end());
  auto want = [&](int id) { return selected.contains(id); };

  try {
    fs::create_directories(work);
    if (want(1)) report(1, "protocol oracle", protocol_oracle());
    if (want(2)) report(2, "gradient correctness", gradient_correctness());
    if (want(9)) report(9, "correlation control", correlation_control());
    if (want(8)) report(8, "determinism and persistence", determinism(smoke, work, verbose));
    if (want(3) || want(4) || want(5) || want(6) || want(7)) {
      const DeskRun run = run_desk(desk, fs::path(work) / "desk", verbose);
      std::string disagreement;
      const double eval_seconds = recompute_nmse(run, &disagreement);
      if (want(3)) {
        Verdict v = nmse_trend(run, eval_seconds);
        if (!disagreement.empty()) {
          v.pass = false;
          v.detail += "; " + disagreement;
        }
        report(3, "NMSE trend at low SNR", v);
      }
      if (want(4)) report(4, "NMSE monotone in SNR", monotonicity(run));
      if (want(5)) report(5, "SE trend", se_trend(run));
      if (want(6)) report(6, "reference provenance ordering", reference_ordering(run));
      if (want(7)) report(7, "complexity ordering", timing_ordering(run));
    }
  } catch (const std::exception& e) {
    fmt::print("[FAIL] acceptance aborted: {}\n", e.what());
    return 1;
  }
  fmt::print("{} of {} criteria passed\n", selected.size() - failures, selected.size());
  return failures == 0 ? 0 : 1;
}
