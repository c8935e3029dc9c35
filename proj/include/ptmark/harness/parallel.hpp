#pragma once

#include <cstddef>
#include <functional>

namespace ptmark {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency).
/// Work is handed out by an atomic counter; results must be written to per-index slots.
/// The first exception thrown by any worker is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace ptmark
