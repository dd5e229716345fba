#pragma once

#include <cstddef>
#include <functional>

namespace sturmian {

/// Worker count: STURMIAN_THREADS if set and positive, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, n) on a bounded pool of worker_count() threads.
/// Indices are handed out dynamically; the first exception thrown by any
/// body is rethrown on the calling thread after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sturmian
