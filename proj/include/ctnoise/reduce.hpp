#pragma once

// Deterministic reductions and a fixed-slot parallel map. Results are written
// by index and reduced in a fixed tree order, so the output bits never depend
// on the number of workers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace ctnoise {

/// Pairwise (tree) summation with a fixed split rule.
[[nodiscard]] inline double pairwise_sum(std::span<const double> xs) noexcept {
  if (xs.size() <= 8) {
    double acc = 0.0;
    for (const double x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  /// Unbiased sample variance; NaN when count < 2.
  double variance = 0.0;
  /// Standard error of the mean; NaN when count < 2.
  double standard_error = 0.0;
};

[[nodiscard]] inline SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) {
    s.mean = s.variance = s.standard_error = std::nan("");
    return s;
  }
  s.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) {
    s.variance = s.standard_error = std::nan("");
    return s;
  }
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - s.mean) * (xs[i] - s.mean);
  s.variance = pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
  s.standard_error = std::sqrt(s.variance / static_cast<double>(xs.size()));
  return s;
}

/// Calls fn(i) for i in [0, count) on up to `workers` threads and returns the
/// results in index order. The first exception thrown by any call is rethrown.
template <class T, class Fn>
[[nodiscard]] std::vector<T> parallel_map(std::size_t count, unsigned workers, Fn&& fn) {
  std::vector<T> out(count);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace ctnoise
