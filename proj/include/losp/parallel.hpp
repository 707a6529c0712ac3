#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace losp {

void set_thread_count(int n);
int thread_count();

namespace detail {
/// True on worker threads; nested parallel_for calls then run serially.
inline thread_local bool in_worker = false;
} // namespace detail

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; the
/// body must only write to state owned by index i so results do not depend on
/// the thread count.
template <class Body>
void parallel_for(std::size_t n, Body &&body)
{
  std::size_t const workers =
      detail::in_worker ? 1 : std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t const chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      detail::in_worker = true;
      try {
        std::size_t const lo = w * chunk;
        std::size_t const hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
          body(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) {
    t.join();
  }
  for (auto &e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

} // namespace losp
