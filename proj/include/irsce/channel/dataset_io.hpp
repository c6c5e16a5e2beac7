// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "irsce/channel/channel.hpp"
#include "irsce/core/cmatrix.hpp"

namespace irsce::channel {

inline constexpr std::uint32_t kMatrixFileVersion = 1;
inline constexpr char kChannelMagic[] = "IRSD";
inline constexpr char kObservationMagic[] = "IRSO";

/// Per-user matrix sequences plus one reference matrix per user, as stored in
/// IRSD (channel states) and IRSO (observations) files. Every matrix is
/// M x (N+1).
struct MatrixSet {
  int num_users = 0;
  int rows = 0;              // M
  int irs_elements = 0;      // N
  std::vector<std::vector<CMatrix>> samples;  // [user][sample]
  std::vector<CMatrix> reference;             // [user]

  int num_samples() const { return samples.empty() ? 0 : static_cast<int>(samples.front().size()); }

  /// Throws FormatError when shapes disagree with the header fields.
  void check_shapes() const;
};

MatrixSet to_matrix_set(const Dataset& ds);

/// Layout: magic, version u32, K, M, N, n_samples u32, samples
/// user-major / sample-major / row-major as interleaved f64 (re, im), then
/// the K reference matrices in the same layout. All little-endian.
void write_matrix_set(const std::filesystem::path& path, const char* magic, const MatrixSet& set);
MatrixSet read_matrix_set(const std::filesystem::path& path, const char* magic);

}  // namespace irsce::channel
