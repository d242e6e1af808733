#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <new>
#include <span>
#include <vector>

#include "gpeopt/core/error.hpp"
#include "gpeopt/core/grid.hpp"
#include "gpeopt/core/parallel.hpp"

namespace gpeopt {

using cplx = std::complex<double>;

/// 64-byte aligned storage so FFTW plans made on one buffer are valid for all.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;
  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    const std::size_t bytes = ((n * sizeof(T) + alignment - 1) / alignment) * alignment;
    void* p = std::aligned_alloc(alignment, bytes == 0 ? alignment : bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using ComplexArray = std::vector<cplx, AlignedAllocator<cplx>>;
using RealArray = std::vector<double, AlignedAllocator<double>>;

/// Complex wave function sampled on a Grid.
struct ComplexField {
  Grid grid;
  ComplexArray values;

  ComplexField() = default;
  explicit ComplexField(Grid g) : grid(std::move(g)), values(grid.size(), cplx{}) {}
  ComplexField(Grid g, ComplexArray v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) throw ShapeError("complex field: value count does not match grid");
  }

  std::size_t size() const noexcept { return values.size(); }
  cplx& operator[](std::size_t i) noexcept { return values[i]; }
  const cplx& operator[](std::size_t i) const noexcept { return values[i]; }
};

/// Real-valued field (potentials, densities, jacobians).
struct RealField {
  Grid grid;
  RealArray values;

  RealField() = default;
  explicit RealField(Grid g) : grid(std::move(g)), values(grid.size(), 0.0) {}
  RealField(Grid g, RealArray v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) throw ShapeError("real field: value count does not match grid");
  }

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) noexcept { return values[i]; }
  const double& operator[](std::size_t i) const noexcept { return values[i]; }
};

template <class A, class B>
void require_same_grid(const A& a, const B& b, const char* what) {
  if (!(a.grid == b.grid)) throw ShapeError(std::string(what) + ": operands live on different grids");
}

/// Raw-span L2 product sum conj(a_j) b_j * dV (rectangle rule).
inline cplx inner_product(std::span<const cplx> a, std::span<const cplx> b, double cell_volume) {
  const cplx s = parallel_sum<cplx>(a.size(), [&](std::size_t i) { return std::conj(a[i]) * b[i]; });
  return s * cell_volume;
}

/// L2 scalar product <a, b> = integral conj(a) b, rectangle rule on the periodic grid.
inline cplx inner_product(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a, b, "inner_product");
  return inner_product(std::span<const cplx>(a.values), std::span<const cplx>(b.values), a.grid.cell_volume());
}

inline double norm_squared(std::span<const cplx> a, double cell_volume) {
  return parallel_sum<double>(a.size(), [&](std::size_t i) { return std::norm(a[i]); }) * cell_volume;
}

inline double norm(const ComplexField& a) { return std::sqrt(norm_squared(a.values, a.grid.cell_volume())); }

inline void normalize(ComplexField& a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("normalize: zero or non-finite norm");
  const double s = 1.0 / n;
  for (auto& v : a.values) v *= s;
}

/// Distance ||a - b|| in L2.
inline double l2_distance(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a, b, "l2_distance");
  const double s = parallel_sum<double>(a.size(), [&](std::size_t i) { return std::norm(a.values[i] - b.values[i]); });
  return std::sqrt(s * a.grid.cell_volume());
}

inline double max_abs_difference(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a, b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

inline bool all_finite(std::span<const cplx> a) {
  for (const auto& v : a)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Samples f(x, y, z) on every grid point.
template <class F>
ComplexField sample_complex(const Grid& grid, F&& f) {
  ComplexField out(grid);
  for_each_point(grid, [&](std::size_t i, double x, double y, double z) { out.values[i] = f(x, y, z); });
  return out;
}

template <class F>
RealField sample_real(const Grid& grid, F&& f) {
  RealField out(grid);
  for_each_point(grid, [&](std::size_t i, double x, double y, double z) { out.values[i] = f(x, y, z); });
  return out;
}

}  // namespace gpeopt
