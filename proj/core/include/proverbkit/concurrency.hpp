#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace proverbkit {

/// Runs fn(i) for i in [0, n) on at most `width` threads (the caller's
/// thread included). The first exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t width, Fn&& fn) {
  if (n == 0) return;
  width = std::clamp<std::size_t>(width, 1, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(width - 1);
    for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace proverbkit
