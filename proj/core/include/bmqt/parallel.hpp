#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bmqt {

/// Worker count used by data-parallel loops. Defaults to the hardware
/// concurrency (capped at 16); the BMQT_THREADS environment variable
/// overrides it. Results never depend on this value.
int worker_count();

/// Runs fn(begin, end) over disjoint chunks of [0, n), possibly on several
/// threads. Chunk boundaries are fixed by n and worker_count(); the body must
/// only write to per-index slots or combine through order-independent
/// reductions (min/max), so the outcome is thread-count independent.
/// `serial_below`: total sizes smaller than this run on the calling thread
/// (use 1 for loops whose individual items are expensive).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t serial_below = 2048);

/// Fixed-order pairwise (cascade) summation; deterministic and considerably
/// more accurate than a running sum for long arrays.
double pairwise_sum(std::span<const double> v);

}  // namespace bmqt
