#pragma once

#include <cstddef>
#include <functional>

namespace dko {

// Number of worker threads used by parallel_for (0 = hardware concurrency).
void set_max_threads(unsigned n) noexcept;
unsigned max_threads() noexcept;

// Runs body(i) for i in [0, n). Work is split into contiguous chunks; the
// body must only write to per-index state so results do not depend on the
// schedule. The first exception thrown by any chunk is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dko
