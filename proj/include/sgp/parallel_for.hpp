#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace sgp {

// Runs fn(i) for i in [0, n) on `threads` threads. The first exception (by
// index) is rethrown after the loop, since exceptions may not leave an
// OpenMP region.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace sgp
