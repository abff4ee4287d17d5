#pragma once

#include <cstddef>
#include <functional>

namespace fvsggm {

/// Worker count: FVSGGM_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; the
/// exception from the lowest failing index is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fvsggm
