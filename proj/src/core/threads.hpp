#pragma once

#include <cstddef>
#include <functional>

namespace rovi {

// Number of worker threads: ROVI_THREADS when set (>= 1), else the hardware
// concurrency.
unsigned thread_count();

// Runs fn(i) for i in [0, n), chunked over threads. Results must be written
// to disjoint slots; the first exception thrown by any worker is rethrown on
// the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace rovi
