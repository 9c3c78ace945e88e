#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace pocsim {

/// Worker count: POCSIM_THREADS when set, otherwise the hardware count.
inline unsigned worker_count() {
  if (const char* env = std::getenv("POCSIM_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Runs body(i) for i in [0, count) on a pool. Each task writes only its
/// own slot, so results are independent of scheduling; task index i is the
/// stream id, which keeps runs reproducible at any thread count.
template <typename Body>
void parallel_for_index(std::size_t count, Body&& body) {
  const unsigned workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace pocsim
