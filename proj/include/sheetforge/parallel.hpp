#pragma once

#include <cstddef>
#include <functional>

namespace sheetforge {

// Worker cap from SHEETFORGE_THREADS (unset or invalid -> hardware concurrency).
std::size_t worker_count();

// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
// visited exactly once; callers write results into slot i so aggregation
// can happen afterwards in index order. The first exception thrown by any
// body is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

}  // namespace sheetforge
