#ifndef SELDYN_UTIL_HPP
#define SELDYN_UTIL_HPP

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace seldyn {

/// Worker cap from SELDYN_THREADS (default 1).  Nonsense values fall
/// back to 1 rather than erroring: the cap is an optimization knob,
/// not a correctness input.
inline int worker_cap() {
  const char* env = std::getenv("SELDYN_THREADS");
  if (!env) return 1;
  const int v = std::atoi(env);
  return v >= 1 ? v : 1;
}

/// Runs fn(i) for i in [0, count) across at most worker_cap() threads.
/// Each index owns its output slot, so results are identical to the
/// serial order regardless of the cap.
inline void parallel_for(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_cap(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < count; i += workers) fn(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace seldyn

#endif
