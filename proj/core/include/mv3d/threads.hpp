#pragma once

#include <cstdint>
#include <functional>

namespace mv3d {

// Worker count of the process-wide pool. Defaults to MV3D_THREADS if set,
// otherwise hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Runs fn over disjoint contiguous chunks of [0, n). Every index is computed
// independently and writes only its own outputs, so results are identical for
// any worker count; chunk assignment never feeds back into values.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace mv3d
