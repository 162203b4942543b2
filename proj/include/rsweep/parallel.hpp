#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace rsweep {

// Resolves the worker count: explicit request > RADIANT_SWEEP_THREADS > 1.
inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RADIANT_SWEEP_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

// Static contiguous partition of [0, count) across workers. Each index is
// processed exactly once and writes only its own outputs, so results are
// independent of the thread count.
inline void parallel_for(int64_t count, int threads, const std::function<void(int64_t)>& fn) {
  threads = static_cast<int>(std::max<int64_t>(1, std::min<int64_t>(threads, count)));
  if (threads <= 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  int64_t chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int64_t lo = t * chunk;
    int64_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace rsweep
