#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace raredyn {

// Runs fn(i) for i in [0, count) on `jobs` threads (0 = hardware threads).
// Work is assigned by index only; callers write results into slots indexed
// by i and reduce afterwards in index order, so outputs never depend on the
// thread count. The exception from the lowest failing index is rethrown.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  if (jobs == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(jobs, count);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  std::size_t best = count, which = 0;
  for (std::size_t w = 0; w < workers; ++w)
    if (errors[w] && error_index[w] < best) {
      best = error_index[w];
      which = w;
    }
  if (best < count) std::rethrow_exception(errors[which]);
}

}  // namespace raredyn
