// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

namespace kenforge {

// Worker cap taken from KENFORGE_THREADS (0 or unset = hardware concurrency).
// Read once per process.
unsigned max_threads();

// Runs body over [0, count) split into contiguous chunks, one per worker.
// Callers write to disjoint slots, so results are identical regardless of
// scheduling. The first exception thrown by any worker is rethrown after
// all workers have joined.
void parallel_for(std::uint64_t count,
                  const std::function<void(std::uint64_t begin, std::uint64_t end)>& body);

}  // namespace kenforge
