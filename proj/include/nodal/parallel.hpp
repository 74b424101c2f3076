#pragma once

// Fixed-partition parallel loops. Each index writes only its own slot, so
// results do not depend on the thread count.

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace nodal {

/// Worker count from NODAL_LAB_THREADS (default 1).
inline int thread_count() {
  if (const char* env = std::getenv("NODAL_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return std::min(n, 256);
  }
  return 1;
}

template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(thread_count(), std::max(n / 256, 1));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      const int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
      const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
      for (int i = lo; i < hi; ++i) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace nodal
