// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/channel/dataset_io.hpp"

#include <fmt/format.h>

#include <fstream>

#include "irsce/core/binary_io.hpp"
#include "irsce/core/error.hpp"

namespace irsce::channel {
namespace {

void write_matrix(io::Writer& w, const CMatrix& m) {
  for (const cdouble z : m.entries()) w.c128(z);
}

CMatrix read_matrix(io::Reader& r, int rows, int cols) {
  CMatrix m(rows, cols);
  for (cdouble& z : m.entries()) z = r.c128();
  return m;
}

}  // namespace

void MatrixSet::check_shapes() const {
  if (static_cast<int>(samples.size()) != num_users || static_cast<int>(reference.size()) != num_users) {
    throw FormatError(fmt::format("matrix set: {} sample lists and {} references for K = {}", samples.size(),
                                  reference.size(), num_users));
  }
  const int n = num_samples();
  auto check = [&](const CMatrix& m) {
    if (m.rows() != rows || m.cols() != irs_elements + 1) {
      throw FormatError(fmt::format("matrix set: entry {} vs header {}x{}", m.shape(), rows, irs_elements + 1));
    }
  };
  for (const auto& seq : samples) {
    if (static_cast<int>(seq.size()) != n) throw FormatError("matrix set: users have different sample counts");
    for (const auto& m : seq) check(m);
  }
  for (const auto& m : reference) check(m);
}

MatrixSet to_matrix_set(const Dataset& ds) {
  MatrixSet set;
  set.num_users = ds.num_users;
  set.rows = ds.rows;
  set.irs_elements = ds.cols - 1;
  set.samples.resize(ds.num_users);
  for (int k = 0; k < ds.num_users; ++k) {
    set.samples[k].reserve(ds.samples[k].size());
    for (const auto& s : ds.samples[k]) set.samples[k].push_back(s.H);
    set.reference.push_back(ds.reference[k].H);
  }
  return set;
}

void write_matrix_set(const std::filesystem::path& path, const char* magic, const MatrixSet& set) {
  set.check_shapes();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
  io::Writer w(os);
  w.magic(magic);
  w.u32(kMatrixFileVersion);
  w.u32(static_cast<std::uint32_t>(set.num_users));
  w.u32(static_cast<std::uint32_t>(set.rows));
  w.u32(static_cast<std::uint32_t>(set.irs_elements));
  w.u32(static_cast<std::uint32_t>(set.num_samples()));
  for (const auto& seq : set.samples) {
    for (const auto& m : seq) write_matrix(w, m);
  }
  for (const auto& m : set.reference) write_matrix(w, m);
  os.flush();
  if (!os) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

MatrixSet read_matrix_set(const std::filesystem::path& path, const char* magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(fmt::format("cannot open {}", path.string()));
  io::Reader r(is, fmt::format("{} file {}", magic, path.filename().string()));
  const std::string tag = r.magic(4);
  if (tag != magic) throw FormatError(fmt::format("{}: bad magic '{}', expected '{}'", path.string(), tag, magic));
  const std::uint32_t version = r.u32();
  if (version != kMatrixFileVersion) {
    throw FormatError(fmt::format("{}: unsupported version {} (expected {})", path.string(), version, kMatrixFileVersion));
  }
  MatrixSet set;
  set.num_users = static_cast<int>(r.u32());
  set.rows = static_cast<int>(r.u32());
  set.irs_elements = static_cast<int>(r.u32());
  const auto n = static_cast<int>(r.u32());
  const std::uintmax_t expected =
      24 + static_cast<std::uintmax_t>(set.num_users) * (n + 1ull) * set.rows * (set.irs_elements + 1ull) * 16;
  if (std::filesystem::file_size(path) < expected) r.truncated();
  const int cols = set.irs_elements + 1;
  set.samples.assign(set.num_users, {});
  for (auto& seq : set.samples) {
    seq.reserve(n);
    for (int t = 0; t < n; ++t) seq.push_back(read_matrix(r, set.rows, cols));
  }
  for (int k = 0; k < set.num_users; ++k) set.reference.push_back(read_matrix(r, set.rows, cols));
  return set;
}

}  // namespace irsce::channel
