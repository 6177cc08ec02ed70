#pragma once

#include <cstddef>
#include <functional>

namespace csi {

/// Worker count: hardware concurrency, capped by the CSI_THREADS
/// environment variable when set to a positive integer.
int worker_count();

/// Runs fn(i) for i in [0, n) split into contiguous chunks across workers.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace csi
