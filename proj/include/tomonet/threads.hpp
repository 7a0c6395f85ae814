#pragma once

#include <functional>

namespace tomonet {

// Process-wide worker count for parallel_for. Default is 1; results are
// independent of the value because parallel regions only write disjoint state.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [begin, end), split into contiguous chunks across the
// configured worker count. fn must only touch per-i state.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace tomonet
