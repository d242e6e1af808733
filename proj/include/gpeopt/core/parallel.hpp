#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gpeopt {

inline int thread_count() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Caps OpenMP parallelism for pointwise loops. FFT threading is configured
/// separately by the FFT layer, which reads thread_count() when planning.
inline void set_thread_count(int n) noexcept {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) f(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

/// Sum of f(i) over [0, n). The range is cut into one contiguous chunk per
/// thread and the partial sums are combined in chunk order, so the result is
/// reproducible for a fixed thread count.
template <class T, class F>
T parallel_sum(std::size_t n, F&& f) {
  const int threads = thread_count();
  if (threads <= 1 || n < 4096) {
    T acc{};
    for (std::size_t i = 0; i < n; ++i) acc += f(i);
    return acc;
  }
  std::vector<T> partial(static_cast<std::size_t>(threads), T{});
  const std::size_t chunk = (n + threads - 1) / threads;
#ifdef _OPENMP
#pragma omp parallel for schedule(static, 1)
#endif
  for (int t = 0; t < threads; ++t) {
    const std::size_t lo = static_cast<std::size_t>(t) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    T acc{};
    for (std::size_t i = lo; i < hi; ++i) acc += f(i);
    partial[static_cast<std::size_t>(t)] = acc;
  }
  T acc{};
  for (const T& p : partial) acc += p;
  return acc;
}

}  // namespace gpeopt
