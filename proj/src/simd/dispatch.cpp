// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>

#include "irsce/simd/cpu.hpp"
#include "kernels_impl.hpp"

namespace irsce::simd {
namespace {

Level probe_cpu() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
#if defined(IRSCE_HAVE_AVX512)
  if (__builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma")) return Level::avx512;
#endif
#if defined(IRSCE_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Level::avx2;
#endif
#endif
  return Level::scalar;
}

Level initial_level() noexcept {
  Level level = detected_level();
  if (const char* env = std::getenv("IRSCE_SIMD")) {
    if (auto requested = parse_level(env); requested && *requested < level) level = *requested;
  }
  return level;
}

std::atomic<Level>& current() noexcept {
  static std::atomic<Level> level{initial_level()};
  return level;
}

}  // namespace

Level detected_level() noexcept {
  static const Level level = probe_cpu();
  return level;
}

Level active_level() noexcept { return current().load(std::memory_order_relaxed); }

Level set_level(Level requested) noexcept {
  const Level level = requested < detected_level() ? requested : detected_level();
  current().store(level, std::memory_order_relaxed);
  return level;
}

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::scalar: return "scalar";
    case Level::avx2: return "avx2";
    case Level::avx512: return "avx512";
  }
  return "unknown";
}

std::optional<Level> parse_level(std::string_view name) noexcept {
  if (name == "scalar") return Level::scalar;
  if (name == "avx2") return Level::avx2;
  if (name == "avx512") return Level::avx512;
  return std::nullopt;
}

template <>
const KernelTable<float>& kernels<float>(Level level) noexcept {
  if (level > detected_level()) level = detected_level();
#if defined(IRSCE_HAVE_AVX512)
  if (level == Level::avx512) return detail::kAvx512F32;
#endif
#if defined(IRSCE_HAVE_AVX2)
  if (level >= Level::avx2) return detail::kAvx2F32;
#endif
  return detail::kScalarF32;
}

template <>
const KernelTable<double>& kernels<double>(Level level) noexcept {
  if (level > detected_level()) level = detected_level();
#if defined(IRSCE_HAVE_AVX2)
  if (level >= Level::avx2) return detail::kAvx2F64;
#endif
  return detail::kScalarF64;
}

}  // namespace irsce::simd
