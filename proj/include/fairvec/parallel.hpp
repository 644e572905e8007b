#pragma once

#include <cstddef>
#include <functional>

namespace fairvec {

// Worker count for internal parallelism: hardware concurrency, capped by
// the FAIRVEC_THREADS environment variable when it holds a positive integer.
std::size_t worker_count();

// Splits [0, n) into contiguous chunks and runs body(begin, end) on each,
// one chunk per worker. Chunks never overlap, so bodies that only write
// rows inside their own range need no synchronization. The first exception
// thrown by any chunk is rethrown after all workers join.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 256);

}  // namespace fairvec
