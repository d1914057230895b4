#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace surfield {

/// Thread budget handed down from the caller. Library results never depend on it.
struct Parallelism {
  unsigned threads = 1;

  static Parallelism hardware();
};

/// Runs body(begin, end) over a static partition of [0, n) into contiguous chunks.
template <class Body>
void parallel_for(std::size_t n, Parallelism par, Body&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(par.threads, n));
  if (workers <= 1) {
    if (n > 0) body(std::size_t{0}, n);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

/// Pairwise (tree) summation in index order; result is independent of threading.
double pairwise_sum(std::span<const double> xs);

}  // namespace surfield
