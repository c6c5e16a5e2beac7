// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

// irsce: generate | train | sweep | ablate-ref | bench
// Exit codes: 0 success, 2 validation error, 1 runtime error.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "irsce/core/error.hpp"
#include "irsce/harness/pipeline.hpp"

namespace {

using irsce::harness::RunOptions;

struct Command {
  const char* name;
  const char* help;
  void (*run)(const RunOptions&);
};

constexpr Command kCommands[] = {
    {"generate", "Generate channel datasets and observations", irsce::harness::run_generate},
    {"train", "Train the learned estimators at every sweep SNR", irsce::harness::run_train},
    {"sweep", "Evaluate NMSE, SE and time over the SNR sweep", irsce::harness::run_sweep},
    {"ablate-ref", "Compare reference provenances (and sizes)", irsce::harness::run_ablate_reference},
    {"bench", "Time per-CSI inference of every estimator", irsce::harness::run_bench},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS-assisted multi-user channel estimation simulator"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string spec_path, out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  const Command* selected = nullptr;

  for (const Command& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--spec", spec_path, "Experiment spec (INI)")->required();
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--seed", seed, "Base seed (defaults to the spec's seed)");
    sub->add_flag("--quiet", quiet, "Suppress progress output");
    if (std::string_view(cmd.name) == "train") {
      sub->add_flag("--resume", opt.resume, "Continue training from existing checkpoints");
    }
    sub->callback([&selected, &cmd] { selected = &cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  opt.spec_path = spec_path;
  opt.out_dir = out_dir;
  if (app.get_subcommand(selected->name)->count("--seed") > 0) opt.seed = seed;
  if (!quiet) opt.log = [](const std::string& line) { fmt::print(stderr, "{}\n", line); };

  try {
    selected->run(opt);
  } catch (const irsce::ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
