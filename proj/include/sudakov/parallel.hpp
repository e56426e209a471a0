#pragma once

// Deterministic fan-out. Work is cut into a fixed number of chunks that does
// not depend on the worker count; each chunk owns its RNG stream and its
// partial result, and partials are merged in chunk order. The output is
// therefore bit-identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sudakov {

/// Global worker count used by the Monte Carlo loops (CLI --threads).
inline std::size_t& worker_count() {
  static std::size_t workers = 1;
  return workers;
}

/// Runs body(i) for i in [0, n) on up to worker_count() threads.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Maps chunk indices to partial results, then returns them in order.
template <class Partial, class Fn>
std::vector<Partial> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<Partial> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

/// Sample chunking shared by every Monte Carlo estimator.
inline constexpr std::size_t kChunkSize = 2048;

inline std::size_t chunk_count(std::size_t n_samples) {
  return (n_samples + kChunkSize - 1) / kChunkSize;
}

}  // namespace sudakov
