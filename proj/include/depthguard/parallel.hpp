#pragma once

#include <cstddef>
#include <functional>

namespace depthguard {

/// Worker cap: DEPTHGUARD_THREADS if set to a positive integer, otherwise
/// the number of logical processors.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index
/// runs exactly once; callers write results into slot i so that ordering
/// and any later reduction stay deterministic. The first exception thrown
/// by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace depthguard
