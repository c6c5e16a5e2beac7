// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace irsce::harness {

/// Worker count for a `workers` setting: 0 means hardware concurrency.
int resolve_workers(int requested);

/// Runs task(i) for i in [0, count) on `workers` threads. Tasks must write
/// only to their own output slots; results are then independent of
/// scheduling. The first exception is rethrown after every worker stops.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

}  // namespace irsce::harness
