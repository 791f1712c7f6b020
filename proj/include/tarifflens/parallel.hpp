// Deterministic index-sharded parallel_for. Workers write only to their own
// indices, so results never depend on the schedule. TARIFFLENS_THREADS caps
// the worker count.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace tarifflens {

inline int max_threads() {
  static const int cap = [] {
    const char* env = std::getenv("TARIFFLENS_THREADS");
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (env != nullptr) {
      const int requested = std::atoi(env);
      if (requested >= 1) return std::min(requested, 256);
    }
    return hw;
  }();
  return cap;
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& body) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(max_threads()),
                            std::max<std::size_t>(n, 1));
  if (workers <= 1 || n < 128) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace tarifflens
