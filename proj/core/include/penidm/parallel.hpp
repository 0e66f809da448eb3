#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace penidm {

/// Process-wide worker bound. 1 means everything runs on the calling thread.
void set_num_threads(int n);
int num_threads();

namespace detail {
bool& in_parallel_region();
}

/// Calls f(i) for i in [0, n). Work is split into contiguous chunks; nested calls run
/// inline. The first exception thrown by any f is rethrown on the calling thread.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, num_threads())));
  if (workers <= 1 || detail::in_parallel_region()) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&](std::size_t lo, std::size_t hi) {
    detail::in_parallel_region() = true;
    try {
      for (std::size_t i = lo; i < hi; ++i) f(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
    detail::in_parallel_region() = false;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo < hi) pool.emplace_back(run, lo, hi);
  }
  run(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Pairwise (tree) combination of per-block partial results: partials[0] receives
/// the total. The combination order depends only on the number of blocks.
template <class T, class Combine>
void tree_reduce(std::vector<T>& partials, Combine&& combine) {
  for (std::size_t stride = 1; stride < partials.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < partials.size(); i += 2 * stride) {
      combine(partials[i], partials[i + stride]);
    }
  }
}

}  // namespace penidm
