#pragma once

#include <cstddef>
#include <functional>

namespace lp {

// Worker count: LP_THREADS if set to a positive integer, otherwise the number
// of logical cores.
int thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous blocks, one per
// worker; callers write results into per-index slots and reduce them in index
// order afterwards, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace lp
