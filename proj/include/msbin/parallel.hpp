#pragma once

#include <cstddef>
#include <functional>

namespace msbin {

/// Process-wide worker count used by parallel_for (default 1).
void set_thread_count(int threads);
int thread_count();

/// Runs fn(i) for i in [0, n). Work is split into contiguous static chunks;
/// callers write results into slot i so output never depends on scheduling.
/// If workers throw, the exception from the lowest chunk is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace msbin
