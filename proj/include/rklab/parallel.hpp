#pragma once

#include <cstddef>
#include <functional>

namespace rklab {

/// Runs fn(0..n-1) on `jobs` threads. Work items are claimed one at a time,
/// so callers write results into slot i and reduce in index order. The first
/// exception thrown by any item is rethrown after all threads stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

/// Default worker count: the available hardware parallelism, at least 1.
unsigned default_jobs();

}  // namespace rklab
