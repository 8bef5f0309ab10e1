#pragma once

#include <cstddef>
#include <functional>

namespace giorom {

// Process-wide worker pool. Results are bitwise independent of the thread
// count: parallel_for only partitions index ranges, every element is computed
// by exactly one worker with a fixed per-element reduction order.
void set_num_threads(int n);
int num_threads();

// Runs fn(begin, end) over a partition of [0, n). Runs inline when the range
// is smaller than min_per_thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_per_thread = 2048);

}  // namespace giorom
