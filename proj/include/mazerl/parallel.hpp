#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mazerl {

// Serial is the reference path; Parallel runs the same per-index work under
// OpenMP. Results are written to fixed slots and reduced in index order, so
// both modes produce bitwise-identical output for pure per-index functions.
enum class ExecMode { Serial, Parallel };

template <class T, class Fn>
std::vector<T> map_indexed(std::size_t n, ExecMode mode, Fn&& fn) {
  std::vector<T> out(n);
#ifdef _OPENMP
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    }
    return out;
  }
#else
  (void)mode;
#endif
  for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
  return out;
}

template <class Fn>
void for_indexed(std::size_t n, ExecMode mode, Fn&& fn) {
#ifdef _OPENMP
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)mode;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace mazerl
