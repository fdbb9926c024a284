#pragma once

#include <cstdint>
#include <functional>

namespace unmix {

// Thread cap from HSUNMIX_THREADS (default 1). Kernels written against
// parallel_for compute each index in exactly one chunk, so results are
// bit-identical for every thread count.
int max_threads();

// Runs fn(begin, end) over a partition of [0, n). With max_threads()==1 the
// call is a plain sequential invocation.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace unmix
