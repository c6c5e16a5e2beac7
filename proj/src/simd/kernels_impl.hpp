// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

// Internal: tables defined by the per-ISA translation units.

#pragma once

#include "irsce/simd/kernels.hpp"

namespace irsce::simd::detail {

extern const KernelTable<float> kScalarF32;
extern const KernelTable<double> kScalarF64;

#if defined(IRSCE_HAVE_AVX2)
extern const KernelTable<float> kAvx2F32;
extern const KernelTable<double> kAvx2F64;
#endif

#if defined(IRSCE_HAVE_AVX512)
extern const KernelTable<float> kAvx512F32;
#endif

}  // namespace irsce::simd::detail
