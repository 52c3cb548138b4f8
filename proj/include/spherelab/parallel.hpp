#pragma once

#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace spherelab {

// Worker count: SPHERELAB_THREADS caps it when set, otherwise the hardware
// concurrency. Always at least 1.
inline int thread_count() {
  if (const char* env = std::getenv("SPHERELAB_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) return cap;
  }
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw < 1 ? 1 : hw;
}

// Runs fn(begin, end) over disjoint chunks of [0, n). Each invocation must
// write only to its own output slots; reductions happen after the join, in
// index order, so results never depend on the worker count.
template <class Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
  int workers = thread_count();
  if (workers <= 1 || n < 2) {
    if (n > 0) fn(static_cast<std::int64_t>(0), n);
    return;
  }
  if (workers > n) workers = static_cast<int>(n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::int64_t b = w * chunk;
    std::int64_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace spherelab
