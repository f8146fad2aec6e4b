#pragma once

#include <cstddef>
#include <functional>

namespace qstoch {

// Worker count: hardware concurrency clamped by the QSTOCH_THREADS environment
// variable; always at least 1.
int thread_budget();

// Runs fn(i) for i in [0, count) across the thread budget. Work items must be
// independent; the first exception thrown by any worker is rethrown after all
// workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace qstoch
