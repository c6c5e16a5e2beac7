// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/harness/pipeline.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <optional>

#include "irsce/channel/dataset_io.hpp"
#include "irsce/core/error.hpp"
#include "irsce/estimation/estimation.hpp"
#include "irsce/evaluation/evaluation.hpp"
#include "irsce/harness/csv.hpp"
#include "irsce/harness/manifest.hpp"
#include "irsce/harness/parallel.hpp"
#include "irsce/nn/checkpoint.hpp"
#include "irsce/pilot/protocol.hpp"

namespace irsce::harness {

namespace files {
std::string observations_train(double snr_db) { return fmt::format("obs_train_snr{}.irso", snr_label(snr_db)); }
std::string observations_test(double snr_db) { return fmt::format("obs_test_snr{}.irso", snr_label(snr_db)); }
std::string checkpoint(Method m, double snr_db) {
  return fmt::format("{}_snr{}.irsm", method_name(m), snr_label(snr_db));
}
std::string ablation_checkpoint(est::Provenance p, double snr_db) {
  return fmt::format("ablation_{}_snr{}.irsm", est::provenance_name(p), snr_label(snr_db));
}
std::string loss_curve(Method m, double snr_db) {
  return fmt::format("loss_{}_snr{}.csv", method_name(m), snr_label(snr_db));
}
}  // namespace files

namespace {

namespace fs = std::filesystem;
using Seqs = std::vector<std::vector<CMatrix>>;

// Random streams: Rng::derived(seed, stream(purpose, index, study)). Study 0
// is the main experiment; size-ablation study i uses i + 1.
enum Purpose : std::uint64_t { kChannels = 1, kReferenceObs = 2, kTrainObs = 3, kTestObs = 4, kTraining = 5 };

std::uint64_t stream(std::uint64_t purpose, std::uint64_t index, int study = 0) {
  return (purpose + 10ull * static_cast<std::uint64_t>(study)) * 1'000'000'000ull + index;
}

// Same stream for a given model kind and SNR whichever command trains it.
std::uint64_t training_stream(Method kind, double snr_db, int study = 0) {
  const auto centi_db = static_cast<std::uint64_t>(std::llround(snr_db * 100.0) + 500'000);
  return stream(kTraining, static_cast<std::uint64_t>(kind) * 1'000'000ull + centi_db, study);
}

struct Context {
  ExperimentSpec spec;
  std::string sha;
  std::uint64_t seed = 0;
  fs::path out;
  std::function<void(const std::string&)> log;

  template <typename... A>
  void info(fmt::format_string<A...> f, A&&... args) const {
    if (log) log(fmt::format(f, std::forward<A>(args)...));
  }
  fs::path at(const std::string& name) const { return out / name; }
};

Context open_context(const RunOptions& opt) {
  LoadedSpec loaded = load_spec(opt.spec_path);
  Context ctx;
  ctx.seed = opt.seed.value_or(loaded.spec.seed);
  ctx.spec = std::move(loaded.spec);
  ctx.sha = std::move(loaded.sha256);
  ctx.out = opt.out_dir;
  ctx.log = opt.log;
  return ctx;
}

Manifest open_manifest(const Context& ctx) {
  Manifest m = Manifest::load(ctx.out);
  m.require_match(ctx.sha, ctx.seed);
  return m;
}

channel::MatrixSet read_set(const Context& ctx, const std::string& name, const char* magic) {
  const fs::path path = ctx.at(name);
  if (!fs::exists(path)) throw ValidationError(fmt::format("dataset not found: {}", path.string()));
  channel::MatrixSet set = channel::read_matrix_set(path, magic);
  const ExperimentSpec& s = ctx.spec;
  if (set.num_users != s.num_users || set.rows != s.num_bs_antennas || set.irs_elements != s.num_irs_elements) {
    throw ValidationError(fmt::format("{}: shape K={} M={} N={} does not match the spec (K={} M={} N={})", name,
                                      set.num_users, set.rows, set.irs_elements, s.num_users, s.num_bs_antennas,
                                      s.num_irs_elements));
  }
  return set;
}

struct ChannelData {
  channel::MatrixSet train;
  channel::MatrixSet test;
};

ChannelData make_channels(const ExperimentSpec& spec, std::uint64_t seed, int study) {
  const SystemConfig cfg = spec.system_at(spec.snr_sweep_db.front());
  Rng rng = Rng::derived(seed, stream(kChannels, 0, study));
  const channel::Dataset train = channel::make_dataset(cfg, spec.geometry, spec.n_train, rng);
  const channel::Dataset test = channel::continue_dataset(train, spec.coherence_correlation, spec.n_test, rng);
  return {channel::to_matrix_set(train), channel::to_matrix_set(test)};
}

std::vector<CMatrix> observe_reference(const ExperimentSpec& spec, const SystemConfig& cfg,
                                       const std::vector<CMatrix>& h_ref, std::uint64_t seed, int study) {
  Rng rng = Rng::derived(seed, stream(kReferenceObs, 0, study));
  const auto obs = pilot::observe(h_ref, pilot::make_pilots(cfg), pilot::make_schedule(cfg), cfg, rng);
  std::vector<CMatrix> x_ref;
  for (const auto& o : obs) x_ref.push_back(o.X);
  (void)spec;
  return x_ref;
}

// Observations of every sample; sample t always draws its noise from the same
// stream, so all SNRs share one normalized noise realization.
channel::MatrixSet observe_set(const ExperimentSpec& spec, const SystemConfig& cfg, const channel::MatrixSet& channels,
                               std::vector<CMatrix> x_ref, std::uint64_t seed, Purpose purpose, int study) {
  const pilot::PilotMatrix pilots = pilot::make_pilots(cfg);
  const pilot::ReflectionSchedule sched = pilot::make_schedule(cfg);
  const int k_users = channels.num_users;
  const int n = channels.num_samples();
  channel::MatrixSet out{channels.num_users, channels.rows, channels.irs_elements,
                         Seqs(k_users, std::vector<CMatrix>(n)), std::move(x_ref)};
  parallel_for(static_cast<std::size_t>(n), spec.workers, [&](std::size_t t) {
    Rng rng = Rng::derived(seed, stream(purpose, t, study));
    std::vector<CMatrix> hs;
    for (int k = 0; k < k_users; ++k) hs.push_back(channels.samples[k][t]);
    auto obs = pilot::observe(hs, pilots, sched, cfg, rng);
    for (int k = 0; k < k_users; ++k) out.samples[k][t] = std::move(obs[k].X);
  });
  return out;
}

nn::ModelArchitecture architecture_of(const ExperimentSpec& spec, Method m) {
  return m == Method::mismatch ? est::mismatch_architecture() : est::drn_style_architecture(spec.drn_middle_repeats);
}

void check_checkpoint(const nn::Checkpoint& ck, const fs::path& path, const nn::ModelArchitecture& arch, double s,
                      int users, int rows, int cols) {
  auto fail = [&](const std::string& what) {
    throw ValidationError(fmt::format("checkpoint/spec mismatch in {}: {}", path.string(), what));
  };
  if (!(ck.model.architecture() == arch)) fail("architecture differs");
  if (std::abs(ck.scaling_constant - s) > 1e-12 * s) {
    fail(fmt::format("scaling constant {} but the training set gives {}", ck.scaling_constant, s));
  }
  if (static_cast<int>(ck.x_ref.size()) != users) fail(fmt::format("{} reference users, expected {}", ck.x_ref.size(), users));
  for (std::size_t k = 0; k < ck.x_ref.size(); ++k) {
    if (ck.x_ref[k].rows() != rows || ck.x_ref[k].cols() != cols || ck.h_ref[k].rows() != rows ||
        ck.h_ref[k].cols() != cols) {
      fail(fmt::format("reference shape {} for a {}x{} system", ck.x_ref[k].shape(), rows, cols));
    }
  }
}

nn::Checkpoint load_checked(const fs::path& path, const nn::ModelArchitecture& arch, double s, int users, int rows,
                            int cols) {
  if (!fs::exists(path)) throw ValidationError(fmt::format("checkpoint not found: {}; run train first", path.string()));
  nn::Checkpoint ck = nn::load_checkpoint(path);
  check_checkpoint(ck, path, arch, s, users, rows, cols);
  return ck;
}

est::DrnStyleModel to_drn(nn::Checkpoint ck) { return est::DrnStyleModel{std::move(ck.model), ck.scaling_constant}; }

est::MismatchModel to_mismatch(nn::Checkpoint ck, est::Provenance provenance) {
  return est::MismatchModel{std::move(ck.model),
                            est::ReferencePair{provenance, std::move(ck.x_ref), std::move(ck.h_ref)},
                            ck.scaling_constant};
}

void write_loss_curve(const fs::path& path, const est::TrainingReport& report, bool append) {
  CsvTable table({"epoch", "mean_nmse"});
  long long first = 0;
  if (append && fs::exists(path)) {
    const CsvData old = read_csv(path);
    for (const auto& row : old.rows) table.add_row({std::stoll(row.at(0)), std::stod(row.at(1))});
    first = static_cast<long long>(old.rows.size());
  }
  for (std::size_t e = 0; e < report.loss_curve.size(); ++e) {
    table.add_row({first + static_cast<long long>(e) + 1, report.loss_curve[e]});
  }
  table.write(path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Everything one SNR point needs for training.
struct TrainInputs {
  const Seqs* x_train;
  const Seqs* h_train;
  std::vector<CMatrix> x_ref;
  std::vector<CMatrix> h_ref_true;
  double s;
  int study = 0;
};

struct TrainOutcome {
  est::TrainingReport report;
  double seconds = 0.0;
  bool resumed = false;
};

est::EpochCallback epoch_logger(const Context& ctx, std::string label) {
  return [&ctx, label = std::move(label)](int epoch, double f) { ctx.info("  {} epoch {} nmse {:.6g}", label, epoch, f); };
}

TrainOutcome train_drn(const Context& ctx, double snr, const TrainInputs& in, const fs::path& path, bool resume,
                       est::DrnStyleModel& model_out) {
  const SystemConfig cfg = ctx.spec.system_at(snr);
  const auto sched = pilot::make_schedule(cfg);
  const auto arch = architecture_of(ctx.spec, Method::drn_style);
  Rng rng = Rng::derived(ctx.seed, training_stream(Method::drn_style, snr, in.study));
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome out;
  if (resume && fs::exists(path)) {
    model_out = to_drn(load_checked(path, arch, in.s, 0, cfg.num_bs_antennas, cfg.num_subframes));
    out.resumed = true;
    out.report = est::continue_training(model_out, *in.x_train, *in.h_train, sched, ctx.spec.training, rng,
                                        epoch_logger(ctx, fmt::format("drn_style {} dB", snr_label(snr))));
  } else {
    auto trained = est::train_drn_style_model(*in.x_train, *in.h_train, sched, ctx.spec.training, rng, arch,
                                              epoch_logger(ctx, fmt::format("drn_style {} dB", snr_label(snr))));
    model_out = std::move(trained.model);
    out.report = std::move(trained.report);
  }
  out.seconds = seconds_since(t0);
  nn::save_checkpoint(path, model_out.net, model_out.scaling_constant, {}, {});
  return out;
}

TrainOutcome train_mismatch(const Context& ctx, double snr, const TrainInputs& in, est::Provenance provenance,
                            const est::DrnStyleModel* drn, const fs::path& path, bool resume,
                            est::MismatchModel& model_out) {
  const SystemConfig cfg = ctx.spec.system_at(snr);
  const auto sched = pilot::make_schedule(cfg);
  const auto arch = architecture_of(ctx.spec, Method::mismatch);
  Rng rng = Rng::derived(ctx.seed, training_stream(Method::mismatch, snr, in.study));
  const std::string label = fmt::format("mismatch[{}] {} dB", est::provenance_name(provenance), snr_label(snr));
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome out;
  if (resume && fs::exists(path)) {
    model_out = to_mismatch(load_checked(path, arch, in.s, ctx.spec.num_users, cfg.num_bs_antennas, cfg.num_subframes),
                            provenance);
    out.resumed = true;
    out.report = est::continue_training(model_out, *in.x_train, *in.h_train, ctx.spec.training, rng,
                                        epoch_logger(ctx, label));
  } else {
    est::ReferencePair ref = est::make_reference_pair(provenance, in.x_ref, in.h_ref_true, sched, drn);
    auto trained = est::train_mismatch_model(*in.x_train, *in.h_train, std::move(ref), ctx.spec.training, rng,
                                             epoch_logger(ctx, label));
    model_out = std::move(trained.model);
    out.report = std::move(trained.report);
  }
  out.seconds = seconds_since(t0);
  nn::save_checkpoint(path, model_out.net, model_out.scaling_constant, model_out.reference.x_ref,
                      model_out.reference.h_ref);
  return out;
}

CsvTable train_log_table() {
  return CsvTable({"method", "provenance", "snr_db", "epochs", "final_nmse", "converged", "seconds"});
}

void log_training(CsvTable& table, Method m, std::string_view provenance, double snr, const TrainOutcome& o) {
  table.add_row({std::string(method_name(m)), std::string(provenance), snr,
                 static_cast<long long>(o.report.epochs_run),
                 o.report.loss_curve.empty() ? 0.0 : o.report.loss_curve.back(),
                 static_cast<long long>(o.report.converged ? 1 : 0), o.seconds});
}

std::vector<pilot::Observation> as_observations(const std::vector<CMatrix>& xs, int user) {
  std::vector<pilot::Observation> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(pilot::Observation{user, x, std::nullopt});
  return out;
}

struct Models {
  std::optional<est::DrnStyleModel> drn;
  std::optional<est::MismatchModel> mismatch;
};

Seqs estimate_all(Method m, const Models& models, const Seqs& x_test, const pilot::ReflectionSchedule& sched) {
  Seqs out(x_test.size());
  for (std::size_t k = 0; k < x_test.size(); ++k) {
    switch (m) {
      case Method::ls:
        for (const auto& x : x_test[k]) out[k].push_back(est::estimate_ls(x, sched));
        break;
      case Method::drn_style:
        out[k] = est::estimate_drn_style(*models.drn, as_observations(x_test[k], static_cast<int>(k)), sched);
        break;
      case Method::mismatch:
        out[k] = est::estimate_mismatch(*models.mismatch, as_observations(x_test[k], static_cast<int>(k)));
        break;
    }
  }
  return out;
}

double mean_nmse(const Seqs& h_true, const Seqs& h_est) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < h_true.size(); ++k) {
    for (std::size_t t = 0; t < h_true[k].size(); ++t, ++n) sum += eval::nmse(h_true[k][t], h_est[k][t]);
  }
  return sum / static_cast<double>(n);
}

// Mean SE over test instances; the beamformer sees h_est (or the truth when
// h_est is null) and is scored on the truth.
double mean_se(const ExperimentSpec& spec, const SystemConfig& cfg, const Seqs& h_true, const Seqs* h_est) {
  eval::BeamformerConfig bcfg;
  bcfg.power = spec.beamforming_power;
  bcfg.noise_variance = cfg.noise_variance;
  bcfg.max_rounds = spec.beamformer_rounds;
  bcfg.phase_grid = spec.phase_grid;
  bcfg.shared_r = spec.shared_r;
  const std::size_t n = h_true.front().size();
  std::vector<double> se(n);
  const eval::ZfPhaseAscent beamformer;
  parallel_for(n, spec.workers, [&](std::size_t t) {
    std::vector<CMatrix> truth, est;
    for (std::size_t k = 0; k < h_true.size(); ++k) {
      truth.push_back(h_true[k][t]);
      est.push_back(h_est ? (*h_est)[k][t] : h_true[k][t]);
    }
    se[t] = eval::spectral_efficiency(truth, beamformer.optimize(est, bcfg), cfg.noise_variance).se_bps_hz;
  });
  double sum = 0.0;
  for (const double v : se) sum += v;
  return sum / static_cast<double>(n);
}

// Single-CSI inference time of one method over the test observations.
eval::TimingStats time_method(Method m, const Models& models, const Seqs& x_test, const pilot::ReflectionSchedule& sched,
                              int trials) {
  std::vector<pilot::Observation> pool;
  for (std::size_t k = 0; k < x_test.size(); ++k) {
    for (const auto& x : x_test[k]) pool.push_back(pilot::Observation{static_cast<int>(k), x, std::nullopt});
  }
  volatile double sink = 0.0;
  auto run = [&](std::size_t i) {
    const pilot::Observation& o = pool[i % pool.size()];
    CMatrix h;
    switch (m) {
      case Method::ls:
        h = est::estimate_ls(o.X, sched);
        break;
      case Method::drn_style:
        h = est::estimate_drn_style(*models.drn, o.X, sched);
        break;
      case Method::mismatch:
        h = est::estimate_mismatch(*models.mismatch, o);
        break;
    }
    sink = sink + h(0, 0).real();
  };
  return eval::time_inference(run, static_cast<std::size_t>(trials));
}

double scaling_of(const channel::MatrixSet& train) {
  std::vector<CMatrix> all;
  for (const auto& seq : train.samples) all.insert(all.end(), seq.begin(), seq.end());
  return est::compute_scaling_constant(all);
}

Models load_models(const Context& ctx, double snr, double s) {
  Models models;
  const int m = ctx.spec.num_bs_antennas, c = ctx.spec.num_irs_elements + 1;
  if (ctx.spec.uses(Method::drn_style)) {
    const fs::path path = ctx.at(files::checkpoint(Method::drn_style, snr));
    models.drn = to_drn(load_checked(path, architecture_of(ctx.spec, Method::drn_style), s, 0, m, c));
  }
  if (ctx.spec.uses(Method::mismatch)) {
    const fs::path path = ctx.at(files::checkpoint(Method::mismatch, snr));
    models.mismatch = to_mismatch(
        load_checked(path, architecture_of(ctx.spec, Method::mismatch), s, ctx.spec.num_users, m, c),
        ctx.spec.reference_provenance);
  }
  return models;
}

std::string dat_block_header(std::string_view name, std::string_view columns) {
  return fmt::format("# {}\n# {}\n", name, columns);
}

}  // namespace

double ls_complexity(int m, int c) {
  const double mc = static_cast<double>(m) * c;
  return mc * std::log2(mc);
}

double cnn_complexity(const nn::ModelArchitecture& arch, int m, int n) {
  const double w = arch.width;
  const double io = nn::ModelArchitecture::kIoChannels;
  const double per_block = io * 9 * w + arch.middle_layers_per_block() * w * 9 * w + w * 9 * io;
  return static_cast<double>(m) * (n + 1) * nn::ModelArchitecture::kBlocks * per_block;
}

void run_generate(const RunOptions& opt) {
  const Context ctx = open_context(opt);
  const ExperimentSpec& spec = ctx.spec;
  fs::create_directories(ctx.out);
  Manifest manifest(spec.scenario, ctx.sha, ctx.seed);

  ctx.info("generating {} train + {} test channel states per user", spec.n_train, spec.n_test);
  const ChannelData ch = make_channels(spec, ctx.seed, 0);
  channel::write_matrix_set(ctx.at(files::kChannelsTrain), channel::kChannelMagic, ch.train);
  channel::write_matrix_set(ctx.at(files::kChannelsTest), channel::kChannelMagic, ch.test);
  manifest.record(files::kChannelsTrain, "generate");
  manifest.record(files::kChannelsTest, "generate");

  for (const double snr : spec.observation_snrs()) {
    ctx.info("observations at {} dB", snr_label(snr));
    const SystemConfig cfg = spec.system_at(snr);
    const auto x_ref = observe_reference(spec, cfg, ch.train.reference, ctx.seed, 0);
    const auto train = observe_set(spec, cfg, ch.train, x_ref, ctx.seed, kTrainObs, 0);
    const auto test = observe_set(spec, cfg, ch.test, x_ref, ctx.seed, kTestObs, 0);
    channel::write_matrix_set(ctx.at(files::observations_train(snr)), channel::kObservationMagic, train);
    channel::write_matrix_set(ctx.at(files::observations_test(snr)), channel::kObservationMagic, test);
    manifest.record(files::observations_train(snr), "generate");
    manifest.record(files::observations_test(snr), "generate");
  }
  manifest.save(ctx.out);
}

void run_train(const RunOptions& opt) {
  const Context ctx = open_context(opt);
  const ExperimentSpec& spec = ctx.spec;
  Manifest manifest = open_manifest(ctx);
  const channel::MatrixSet train = read_set(ctx, files::kChannelsTrain, channel::kChannelMagic);
  const double s = scaling_of(train);
  const bool need_drn = spec.uses(Method::drn_style) ||
                        (spec.uses(Method::mismatch) && spec.reference_provenance == est::Provenance::drn_style);
  CsvTable log = train_log_table();

  for (const double snr : spec.snr_sweep_db) {
    const channel::MatrixSet obs = read_set(ctx, files::observations_train(snr), channel::kObservationMagic);
    TrainInputs in{&obs.samples, &train.samples, obs.reference, train.reference, s};
    std::optional<est::DrnStyleModel> drn;
    if (need_drn) {
      drn.emplace();
      const std::string name = files::checkpoint(Method::drn_style, snr);
      ctx.info("training drn_style at {} dB", snr_label(snr));
      const TrainOutcome o = train_drn(ctx, snr, in, ctx.at(name), opt.resume, *drn);
      write_loss_curve(ctx.at(files::loss_curve(Method::drn_style, snr)), o.report, o.resumed);
      log_training(log, Method::drn_style, "", snr, o);
      manifest.record(name, "train");
      manifest.record(files::loss_curve(Method::drn_style, snr), "train");
    }
    if (spec.uses(Method::mismatch)) {
      est::MismatchModel model;
      const std::string name = files::checkpoint(Method::mismatch, snr);
      ctx.info("training mismatch at {} dB", snr_label(snr));
      const TrainOutcome o = train_mismatch(ctx, snr, in, spec.reference_provenance, drn ? &*drn : nullptr,
                                            ctx.at(name), opt.resume, model);
      write_loss_curve(ctx.at(files::loss_curve(Method::mismatch, snr)), o.report, o.resumed);
      log_training(log, Method::mismatch, est::provenance_name(spec.reference_provenance), snr, o);
      manifest.record(name, "train");
      manifest.record(files::loss_curve(Method::mismatch, snr), "train");
    }
    manifest.save(ctx.out);
  }
  log.write(ctx.at(files::kTrainLog));
  manifest.record(files::kTrainLog, "train");
  manifest.save(ctx.out);
}

void run_sweep(const RunOptions& opt) {
  const Context ctx = open_context(opt);
  const ExperimentSpec& spec = ctx.spec;
  Manifest manifest = open_manifest(ctx);
  const channel::MatrixSet train = read_set(ctx, files::kChannelsTrain, channel::kChannelMagic);
  const channel::MatrixSet test = read_set(ctx, files::kChannelsTest, channel::kChannelMagic);
  const double s = scaling_of(train);

  CsvTable results({"snr_db", "method", "mean_nmse", "mean_se_bps_hz", "mean_time_ms", "n_samples", "seed"});
  const auto n_samples = static_cast<long long>(spec.n_test);
  const auto seed = static_cast<long long>(ctx.seed);
  for (const double snr : spec.snr_sweep_db) {
    const SystemConfig cfg = spec.system_at(snr);
    const auto sched = pilot::make_schedule(cfg);
    const channel::MatrixSet obs = read_set(ctx, files::observations_test(snr), channel::kObservationMagic);
    const Models models = load_models(ctx, snr, s);
    for (const Method m : {Method::ls, Method::drn_style, Method::mismatch}) {
      if (!spec.uses(m)) continue;
      const Seqs est = estimate_all(m, models, obs.samples, sched);
      const double nmse = mean_nmse(test.samples, est);
      const double se = mean_se(spec, cfg, test.samples, &est);
      const auto timing = time_method(m, models, obs.samples, sched, spec.timing_trials);
      ctx.info("{} dB {}: nmse {:.6g} se {:.6g} time {:.6g} ms", snr_label(snr), method_name(m), nmse, se,
               timing.mean_ms);
      results.add_row({snr, std::string(method_name(m)), nmse, se, timing.mean_ms, n_samples, seed});
    }
    const double se_perfect = mean_se(spec, cfg, test.samples, nullptr);
    ctx.info("{} dB perfect: se {:.6g}", snr_label(snr), se_perfect);
    results.add_row({snr, std::string("perfect"), 0.0, se_perfect, 0.0, n_samples, seed});
  }
  results.write(ctx.at(files::kResults));

  // gnuplot: one index block per method, columns snr_db mean_nmse mean_se_bps_hz.
  std::string dat;
  const int c_snr = 0, c_method = 1, c_nmse = 2, c_se = 3;
  for (const std::string method : {"ls", "drn_style", "mismatch", "perfect"}) {
    std::string block;
    for (const auto& row : read_csv(ctx.at(files::kResults)).rows) {
      if (row[c_method] == method) block += fmt::format("{} {} {}\n", row[c_snr], row[c_nmse], row[c_se]);
    }
    if (block.empty()) continue;
    if (!dat.empty()) dat += "\n\n";
    dat += dat_block_header(method, "snr_db mean_nmse mean_se_bps_hz") + block;
  }
  write_text_file(ctx.at(files::kResultsDat), dat);
  manifest.record(files::kResults, "sweep");
  manifest.record(files::kResultsDat, "sweep");
  manifest.save(ctx.out);
}

void run_ablate_reference(const RunOptions& opt) {
  const Context ctx = open_context(opt);
  const ExperimentSpec& spec = ctx.spec;
  Manifest manifest = open_manifest(ctx);
  const double snr = spec.ablation_snr_db;
  const SystemConfig cfg = spec.system_at(snr);
  const auto sched = pilot::make_schedule(cfg);
  const channel::MatrixSet train = read_set(ctx, files::kChannelsTrain, channel::kChannelMagic);
  const channel::MatrixSet test = read_set(ctx, files::kChannelsTest, channel::kChannelMagic);
  const channel::MatrixSet obs_train = read_set(ctx, files::observations_train(snr), channel::kObservationMagic);
  const channel::MatrixSet obs_test = read_set(ctx, files::observations_test(snr), channel::kObservationMagic);
  const double s = scaling_of(train);
  const int m = spec.num_bs_antennas, c = spec.num_irs_elements + 1;
  TrainInputs in{&obs_train.samples, &train.samples, obs_train.reference, train.reference, s};
  CsvTable log = train_log_table();

  CsvTable table({"study", "provenance", "M", "N", "snr_db", "mean_nmse", "n_samples", "seed"});
  const auto n_samples = static_cast<long long>(spec.n_test);
  const auto seed = static_cast<long long>(ctx.seed);

  std::optional<est::DrnStyleModel> drn;
  if (std::ranges::find(spec.ablation_provenances, est::Provenance::drn_style) != spec.ablation_provenances.end()) {
    const std::string name = files::checkpoint(Method::drn_style, snr);
    if (fs::exists(ctx.at(name))) {
      drn = to_drn(load_checked(ctx.at(name), architecture_of(spec, Method::drn_style), s, 0, m, c));
    } else {
      ctx.info("training drn_style at {} dB for the DRN-style reference", snr_label(snr));
      drn.emplace();
      log_training(log, Method::drn_style, "", snr, train_drn(ctx, snr, in, ctx.at(name), false, *drn));
      manifest.record(name, "ablate-ref");
    }
  }

  for (const est::Provenance p : spec.ablation_provenances) {
    Models models;
    // The sweep model is reused when it was trained with this provenance.
    std::string name = files::checkpoint(Method::mismatch, snr);
    if (!(p == spec.reference_provenance && spec.uses(Method::mismatch) && fs::exists(ctx.at(name)))) {
      name = files::ablation_checkpoint(p, snr);
    }
    if (fs::exists(ctx.at(name))) {
      ctx.info("reusing {}", name);
      models.mismatch = to_mismatch(
          load_checked(ctx.at(name), architecture_of(spec, Method::mismatch), s, spec.num_users, m, c), p);
    } else {
      ctx.info("training mismatch with {} reference at {} dB", est::provenance_name(p), snr_label(snr));
      models.mismatch.emplace();
      const TrainOutcome o = train_mismatch(ctx, snr, in, p, drn ? &*drn : nullptr, ctx.at(name), false,
                                            *models.mismatch);
      log_training(log, Method::mismatch, est::provenance_name(p), snr, o);
      manifest.record(name, "ablate-ref");
    }
    const double nmse = mean_nmse(test.samples, estimate_all(Method::mismatch, models, obs_test.samples, sched));
    ctx.info("reference {}: nmse {:.6g}", est::provenance_name(p), nmse);
    table.add_row({std::string("reference"), std::string(est::provenance_name(p)), static_cast<long long>(m),
                   static_cast<long long>(spec.num_irs_elements), snr, nmse, n_samples, seed});
  }

  for (std::size_t i = 0; i < spec.size_ablation.size(); ++i) {
    const int study = static_cast<int>(i) + 1;
    ExperimentSpec sized = spec;
    std::tie(sized.num_bs_antennas, sized.num_irs_elements) = spec.size_ablation[i];
    sized.validate();
    ctx.info("size study M={} N={}", sized.num_bs_antennas, sized.num_irs_elements);
    const SystemConfig scfg = sized.system_at(snr);
    const ChannelData ch = make_channels(sized, ctx.seed, study);
    const auto x_ref = observe_reference(sized, scfg, ch.train.reference, ctx.seed, study);
    const auto s_train = observe_set(sized, scfg, ch.train, x_ref, ctx.seed, kTrainObs, study);
    const auto s_test = observe_set(sized, scfg, ch.test, x_ref, ctx.seed, kTestObs, study);
    Context sized_ctx{sized, ctx.sha, ctx.seed, ctx.out, ctx.log};
    TrainInputs sin{&s_train.samples, &ch.train.samples, x_ref, ch.train.reference, scaling_of(ch.train), study};
    Models models;
    models.mismatch.emplace();
    const std::string name = fmt::format("ablation_size_m{}_n{}_snr{}.irsm", sized.num_bs_antennas,
                                         sized.num_irs_elements, snr_label(snr));
    const TrainOutcome o = train_mismatch(sized_ctx, snr, sin, est::Provenance::exact, nullptr, ctx.at(name), false,
                                          *models.mismatch);
    log_training(log, Method::mismatch, "exact", snr, o);
    manifest.record(name, "ablate-ref");
    const double nmse = mean_nmse(ch.test.samples,
                                  estimate_all(Method::mismatch, models, s_test.samples, pilot::make_schedule(scfg)));
    ctx.info("size M={} N={}: nmse {:.6g}", sized.num_bs_antennas, sized.num_irs_elements, nmse);
    table.add_row({std::string("size"), std::string("exact"), static_cast<long long>(sized.num_bs_antennas),
                   static_cast<long long>(sized.num_irs_elements), snr, nmse, n_samples, seed});
  }

  table.write(ctx.at(files::kAblation));
  std::string dat = dat_block_header("reference", "provenance_index mean_nmse");
  std::string sizes;
  int idx = 0;
  for (const auto& row : read_csv(ctx.at(files::kAblation)).rows) {
    if (row[0] == "reference") {
      dat += fmt::format("{} {} # {}\n", idx++, row[5], row[1]);
    } else {
      sizes += fmt::format("{} {} {}\n", row[2], row[3], row[5]);
    }
  }
  if (!sizes.empty()) dat += "\n\n" + dat_block_header("size", "M N mean_nmse") + sizes;
  write_text_file(ctx.at(files::kAblationDat), dat);
  log.write(ctx.at(files::kAblationTrainLog));
  for (const char* f : {files::kAblation, files::kAblationDat, files::kAblationTrainLog}) manifest.record(f, "ablate-ref");
  manifest.save(ctx.out);
}

void run_bench(const RunOptions& opt) {
  const Context ctx = open_context(opt);
  const ExperimentSpec& spec = ctx.spec;
  Manifest manifest = open_manifest(ctx);
  const bool at_ablation = std::ranges::find(spec.snr_sweep_db, spec.ablation_snr_db) != spec.snr_sweep_db.end();
  const double snr = at_ablation ? spec.ablation_snr_db : spec.snr_sweep_db.front();
  const SystemConfig cfg = spec.system_at(snr);
  const auto sched = pilot::make_schedule(cfg);
  const channel::MatrixSet train = read_set(ctx, files::kChannelsTrain, channel::kChannelMagic);
  const channel::MatrixSet obs = read_set(ctx, files::observations_test(snr), channel::kObservationMagic);
  const Models models = load_models(ctx, snr, scaling_of(train));
  const int m = spec.num_bs_antennas, n = spec.num_irs_elements;

  CsvTable table({"method", "run", "snr_db", "mean_ms", "std_ms", "trials", "parameters", "complexity"});
  for (int run = 1; run <= spec.timing_runs; ++run) {
    for (const Method method : {Method::ls, Method::drn_style, Method::mismatch}) {
      if (!spec.uses(method)) continue;
      const auto t = time_method(method, models, obs.samples, sched, spec.timing_trials);
      long long params = 0;
      double complexity = ls_complexity(m, n + 1);
      if (method == Method::drn_style) {
        params = static_cast<long long>(models.drn->net.parameter_count());
        complexity = cnn_complexity(models.drn->net.architecture(), m, n);
      } else if (method == Method::mismatch) {
        params = static_cast<long long>(models.mismatch->net.parameter_count());
        complexity = cnn_complexity(models.mismatch->net.architecture(), m, n);
      }
      ctx.info("run {} {}: {:.6g} ms (std {:.3g})", run, method_name(method), t.mean_ms, t.std_ms);
      table.add_row({std::string(method_name(method)), static_cast<long long>(run), snr, t.mean_ms, t.std_ms,
                     static_cast<long long>(t.trials), params, complexity});
    }
  }
  table.write(ctx.at(files::kTiming));
  manifest.record(files::kTiming, "bench");
  manifest.save(ctx.out);
}

}  // namespace irsce::harness
