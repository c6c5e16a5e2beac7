// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/nn/checkpoint.hpp"

#include <fmt/format.h>

#include <fstream>

#include "irsce/core/binary_io.hpp"
#include "irsce/core/error.hpp"

namespace irsce::nn {
namespace {

constexpr std::uint64_t kMaxArray = 1ull << 28;
constexpr std::uint32_t kMaxDim = 1u << 16;

void write_matrices(io::Writer& w, const std::vector<CMatrix>& ms) {
  for (const auto& m : ms) {
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (const cdouble z : m.entries()) w.c128(z);
  }
}

std::vector<CMatrix> read_matrices(io::Reader& r, std::uint32_t count) {
  std::vector<CMatrix> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t rows = r.u32(), cols = r.u32();
    if (rows > kMaxDim || cols > kMaxDim) throw FormatError(fmt::format("checkpoint: reference shape {}x{} out of range", rows, cols));
    CMatrix m(static_cast<int>(rows), static_cast<int>(cols));
    for (cdouble& z : m.entries()) z = r.c128();
    out.push_back(std::move(m));
  }
  return out;
}

void read_into(io::Reader& r, std::vector<float>& dst, const std::string& name) {
  std::vector<float> v = r.f32_array(kMaxArray);
  if (v.size() != dst.size()) {
    throw FormatError(fmt::format("checkpoint: {} holds {} values, architecture needs {}", name, v.size(), dst.size()));
  }
  dst = std::move(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Model<float>& model, double scaling_constant,
                     const std::vector<CMatrix>& x_ref, const std::vector<CMatrix>& h_ref,
                     bool with_optimizer) {
  if (x_ref.size() != h_ref.size()) {
    throw ValidationError(fmt::format("checkpoint: {} X_Ref vs {} H_Ref matrices", x_ref.size(), h_ref.size()));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
  io::Writer w(os);
  const auto& arch = model.architecture();
  w.magic("IRSM");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(arch.middle_repeats));
  w.u8(arch.residual_skip ? 1 : 0);
  w.f64(scaling_constant);
  for (const auto& unit : model.units()) {
    w.f32_array(unit.conv.weight);
    w.f32_array(unit.conv.bias);
    if (unit.norm) {
      w.f32_array(unit.norm->gamma);
      w.f32_array(unit.norm->beta);
      w.f32_array(unit.norm->running_mean);
      w.f32_array(unit.norm->running_var);
    } else {
      for (int i = 0; i < 4; ++i) w.f32_array({});
    }
  }
  w.u32(static_cast<std::uint32_t>(x_ref.size()));
  write_matrices(w, x_ref);
  write_matrices(w, h_ref);
  if (with_optimizer) {
    w.magic("ADAM");
    w.u64(model.step());
    for (const auto& p : model.parameters()) {
      w.f32_array(p.first_moment);
      w.f32_array(p.second_moment);
    }
  }
  os.flush();
  if (!os) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(fmt::format("cannot open checkpoint {}", path.string()));
  io::Reader r(is, "checkpoint");
  const std::string tag = r.magic(4);
  if (tag != "IRSM") throw FormatError(fmt::format("{}: bad magic, not a checkpoint", path.string()));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(fmt::format("{}: checkpoint version {} is not supported (this build reads version {})",
                                  path.string(), version, kCheckpointVersion));
  }
  ModelArchitecture arch;
  const std::uint32_t repeats = r.u32();
  if (repeats < 1 || repeats > 64) throw FormatError(fmt::format("checkpoint: middle repeats {} out of range", repeats));
  arch.middle_repeats = static_cast<int>(repeats);
  arch.residual_skip = r.u8() != 0;
  const double s = r.f64();
  if (!(s > 0.0) || !std::isfinite(s)) throw FormatError(fmt::format("checkpoint: invalid scaling constant {}", s));

  // The first array is the first conv's weights, [width][2][3][3].
  std::vector<float> first = r.f32_array(kMaxArray);
  if (first.empty() || first.size() % (ModelArchitecture::kIoChannels * 9) != 0) {
    throw FormatError(fmt::format("checkpoint: first weight array has {} values", first.size()));
  }
  arch.width = static_cast<int>(first.size() / (ModelArchitecture::kIoChannels * 9));

  Checkpoint ck{Model<float>(arch), s, {}, {}};
  auto& units = ck.model.units();
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto& u = units[i];
    if (i == 0) {
      u.conv.weight = std::move(first);
    } else {
      read_into(r, u.conv.weight, fmt::format("layer{}.weight", i));
    }
    read_into(r, u.conv.bias, fmt::format("layer{}.bias", i));
    if (u.norm) {
      read_into(r, u.norm->gamma, fmt::format("layer{}.gamma", i));
      read_into(r, u.norm->beta, fmt::format("layer{}.beta", i));
      read_into(r, u.norm->running_mean, fmt::format("layer{}.running_mean", i));
      read_into(r, u.norm->running_var, fmt::format("layer{}.running_var", i));
      for (const float v : u.norm->running_var) {
        if (!(v > 0.0f)) throw FormatError(fmt::format("checkpoint: layer{} running variance {} not positive", i, v));
      }
    } else {
      for (int j = 0; j < 4; ++j) {
        if (!r.f32_array(0).empty()) throw FormatError(fmt::format("checkpoint: layer{} output conv carries BN data", i));
      }
    }
  }
  const std::uint32_t k = r.u32();
  if (k > kMaxDim) throw FormatError(fmt::format("checkpoint: {} reference users out of range", k));
  ck.x_ref = read_matrices(r, k);
  ck.h_ref = read_matrices(r, k);
  if (!r.at_end()) {
    if (r.magic(4) != "ADAM") throw FormatError("checkpoint: unknown trailing section");
    ck.model.set_step(r.u64());
    for (auto& p : ck.model.parameters()) {
      for (auto* dst : {&p.first_moment, &p.second_moment}) {
        const std::vector<float> v = r.f32_array(kMaxArray);
        if (v.size() != dst->size()) throw FormatError(fmt::format("checkpoint: optimizer state for {} has wrong length", p.name));
        std::copy(v.begin(), v.end(), dst->begin());
      }
    }
    if (!r.at_end()) throw FormatError("checkpoint: trailing bytes after optimizer state");
  }
  return ck;
}

}  // namespace irsce::nn
