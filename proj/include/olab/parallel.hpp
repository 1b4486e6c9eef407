#pragma once

// Data-parallel map over independent jobs (seeds, sweep points, grid cells).
// Each job owns its state and writes only its own output slot, so results do
// not depend on the thread count; serial_map is the reference the parallel
// version is tested against.

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace olab {

template <typename Fn>
auto serial_map(std::size_t n, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  std::vector<std::invoke_result_t<Fn&, std::size_t>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

/// jobs == 0 uses the OpenMP default thread count. The first exception thrown
/// by any job (lowest index) is rethrown after the loop.
template <typename Fn>
auto parallel_map(std::size_t n, Fn&& fn, std::size_t jobs = 0)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  static_assert(std::is_default_constructible_v<R>, "parallel_map needs default-constructible results");
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#ifdef _OPENMP
  const int threads = jobs == 0 ? omp_get_max_threads() : static_cast<int>(jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  (void)jobs;
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace olab
