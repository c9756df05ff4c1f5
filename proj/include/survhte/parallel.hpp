#pragma once

#include <cstddef>
#include <exception>
#include <utility>

#include <omp.h>

namespace survhte {

// Default worker count: SURVHTE_THREADS if set, else the OpenMP maximum.
int default_threads();

// 0 or negative requests the default.
int resolve_threads(int requested);

// OpenMP-parallel index loop. threads <= 1 runs the plain serial loop, which
// doubles as the reference implementation the tests compare against. Each
// iteration must only write to its own slots; exceptions are captured and
// rethrown after the region so they do not cross the OpenMP boundary.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const int t = resolve_threads(threads);
  if (t <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error = nullptr;
#pragma omp parallel for schedule(dynamic) num_threads(t)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical
      {
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace survhte
