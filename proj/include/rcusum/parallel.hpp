#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rcusum {

// Worker count: RCUSUM_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
inline int default_threads() {
  if (const char* env = std::getenv("RCUSUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Calls body(i) for i in [0, n) on up to `threads` workers.  Results are
// written by index, so callers that reduce in index order get the same
// answer for any thread count.  The exception from the lowest failing
// index is rethrown after all workers finish.  tick (may be empty) is
// called under a lock after each completed item.
template <typename Body>
void parallel_for(long n, int threads, Body&& body, const std::function<void()>& tick = {}) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::clamp<long>(threads, 1, n));
  std::atomic<long> next{0};
  std::mutex mu;
  long failed_index = n;
  std::exception_ptr failure;

  auto work = [&] {
    for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        next.store(n);
      }
      if (tick) {
        std::lock_guard<std::mutex> lock(mu);
        tick();
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rcusum
