#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bones {

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Calls fn(i) for i in [0, n) on up to `workers` threads.  fn must write only
// to slot i; the first exception is rethrown after all threads join.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, unsigned(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(m);
          if (!err) err = std::current_exception();
          next = n;
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace bones
