#pragma once

#include <functional>

#include "lawin/common.hpp"

namespace lawin {

// Worker count from LAWIN_THREADS; 0 or unset means single-threaded.
int worker_count();

// Splits [begin, end) into contiguous chunks, one per worker. Chunks are
// disjoint, so body instances may write to disjoint output ranges without
// synchronization. Runs inline when the range is small or workers == 1.
// Results are independent of the worker count as long as bodies only
// touch their own chunk.
void parallel_for(index_t begin, index_t end, index_t grain,
                  const std::function<void(index_t, index_t)>& body);

}  // namespace lawin
