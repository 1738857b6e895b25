#pragma once

// Minimal fork-join helper for per-particle work.
//
// Work is partitioned into contiguous index ranges and each worker writes only
// to slots owned by its range; reductions happen afterwards in index order on
// the calling thread.  Results are therefore bitwise independent of the worker
// count.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fekl {

class WorkerPool {
 public:
  // n_workers == 0 picks the hardware concurrency.
  explicit WorkerPool(unsigned n_workers = 0) {
    if (n_workers == 0) n_workers = std::max(1u, std::thread::hardware_concurrency());
    n_workers_ = n_workers;
  }

  unsigned size() const { return n_workers_; }

  // Invoke f(i) for i in [0, n).  f must only touch state owned by index i.
  template <class F>
  void parallel_for(std::size_t n, F&& f) const {
    if (n == 0) return;
    if (n_workers_ <= 1 || n == 1) {
      for (std::size_t i = 0; i < n; ++i) f(i);
      return;
    }
    const unsigned k = static_cast<unsigned>(std::min<std::size_t>(n_workers_, n));
    const std::size_t chunk = (n + k - 1) / k;
    std::vector<std::thread> threads;
    threads.reserve(k);
    std::vector<std::exception_ptr> errors(k);
    for (unsigned w = 0; w < k; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      threads.emplace_back([&, w, lo, hi] {
        try {
          for (std::size_t i = lo; i < hi; ++i) f(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

 private:
  unsigned n_workers_ = 1;
};

}  // namespace fekl
