// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>

namespace irsce::simd {

/// Instruction-set tier a kernel table targets. Ordered by capability.
enum class Level { scalar = 0, avx2 = 1, avx512 = 2 };

/// Highest tier the running CPU (and this build) supports.
Level detected_level() noexcept;

/// Tier used by `active_kernels()`. Starts at `detected_level()`, lowered by
/// the IRSCE_SIMD environment variable (scalar|avx2|avx512) or `set_level`.
Level active_level() noexcept;

/// Requests a tier; clamped to `detected_level()`. Returns the tier in effect.
Level set_level(Level requested) noexcept;

std::string_view to_string(Level level) noexcept;
std::optional<Level> parse_level(std::string_view name) noexcept;

}  // namespace irsce::simd
