#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace cosshell {

inline int& thread_count() {
  static int n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

// Static chunking over [0, n). Results must be written to per-index storage;
// reductions happen serially afterwards so that energies and assembled
// objects do not depend on the thread count.
template <class F>
inline void parallel_for(int n, F&& f) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &f]() {
      for (int i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cosshell
