#pragma once

#include <cstddef>
#include <functional>

namespace fdot {

// Process-wide cap on worker threads (0 = hardware concurrency).
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for i in [0, n) across worker threads. Falls back to a serial
// loop for small n or when the cap is 1. fn must be safe to call concurrently.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fdot
