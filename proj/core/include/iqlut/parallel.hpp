#pragma once

#include <functional>

namespace iqlut {

/// Worker count from IQLUT_THREADS, falling back to hardware concurrency.
int default_thread_count();

/// Calls fn(begin, end) over a static partition of [0, count). Each index is
/// visited by exactly one worker; with threads <= 1 everything runs inline.
/// The first exception thrown by any worker is rethrown after all join.
void parallel_for(int count, int threads, const std::function<void(int, int)>& fn);

}  // namespace iqlut
