#pragma once

#include <cstddef>
#include <functional>

namespace rmfg {

/// Worker count used by parallel_for. 0 selects the hardware concurrency.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Runs body(i) for i in [0, n) on static contiguous chunks. Callers write results into
/// per-index slots so the outcome does not depend on the number of threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rmfg
