#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cartan {

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

/// Force a worker count (0 restores the default). Used by tests and the CLI.
inline void set_thread_count(int n) { detail::thread_override().store(std::max(0, n)); }

/// Worker count: explicit override, else CARTAN_THREADS, else hardware concurrency.
inline int thread_count() {
  if (int o = detail::thread_override().load(); o > 0) return o;
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CARTAN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = (n > 0) ? std::min(n, cap) : cap;
  }
  return std::max(1, n);
}

/// Runs fn(i) for i in [0, n). Each index is processed exactly once and
/// results must be written to per-index slots, so the outcome does not depend
/// on the worker count. The first exception thrown is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int workers = static_cast<int>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cartan
