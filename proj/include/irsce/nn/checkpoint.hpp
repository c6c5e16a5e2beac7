// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "irsce/core/cmatrix.hpp"
#include "irsce/nn/model.hpp"

namespace irsce::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to run an estimator offline: the network, its input
/// scaling constant and, for the mismatch estimator, the reference pair.
struct Checkpoint {
  Model<float> model;
  double scaling_constant = 1.0;
  std::vector<CMatrix> x_ref;  // per user, M x C; empty for the DRN-style denoiser
  std::vector<CMatrix> h_ref;  // per user, M x (N+1)
};

/// Layout (little-endian): "IRSM", version u32, middle repeats D u32,
/// residual flag u8, scaling constant f64; per layer weights, bias, gamma,
/// beta, running mean, running var as u64-length-prefixed f32 arrays (empty
/// BN arrays on block output layers); u32 K, then per user X_Ref as u32 rows,
/// u32 cols and interleaved f64 entries, then H_Ref the same way. With
/// `with_optimizer` a trailing "ADAM" section holds the step counter u64 and
/// every parameter's first and second moments, in parameter order.
void save_checkpoint(const std::filesystem::path& path, Model<float>& model, double scaling_constant,
                     const std::vector<CMatrix>& x_ref, const std::vector<CMatrix>& h_ref,
                     bool with_optimizer = true);

/// Throws FormatError on bad magic, unsupported version (both numbers in the
/// message) or "truncated checkpoint".
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace irsce::nn
