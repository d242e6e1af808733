#pragma once

#include <array>
#include <span>

#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/core/grid.hpp"

namespace gpeopt {

/// Central 6th-order second-derivative weights for offsets 0..3 (unit spacing).
inline constexpr std::array<double, 4> fd6_weights = {-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};

/// out = Laplacian(in) with the 6th-order stencil on every axis and zero
/// values outside the box.
template <class T>
void fd_laplacian(const Grid& grid, std::span<const T> in, std::span<T> out) {
  if (in.size() != grid.size() || out.size() != grid.size()) throw ShapeError("fd_laplacian: size mismatch");
  const int r = grid.rank();
  const int nx = grid.points(0), ny = grid.ny(), nz = grid.nz();
  const std::array<int, 3> n = {nx, ny, nz};
  const std::array<std::ptrdiff_t, 3> stride = {static_cast<std::ptrdiff_t>(ny) * nz, nz, 1};
  std::array<double, 3> inv_h2 = {0.0, 0.0, 0.0};
  for (int a = 0; a < r; ++a) inv_h2[static_cast<std::size_t>(a)] = 1.0 / (grid.spacing(a) * grid.spacing(a));
  double center = 0.0;
  for (int a = 0; a < r; ++a) center += fd6_weights[0] * inv_h2[static_cast<std::size_t>(a)];

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int iz = 0; iz < nz; ++iz) {
        const std::array<int, 3> pos = {ix, iy, iz};
        const std::ptrdiff_t i = ix * stride[0] + iy * stride[1] + iz;
        T acc = center * in[static_cast<std::size_t>(i)];
        for (int a = 0; a < r; ++a) {
          const auto au = static_cast<std::size_t>(a);
          T axis{};
          for (int k = 1; k <= 3; ++k) {
            T pair{};
            if (pos[au] + k < n[au]) pair += in[static_cast<std::size_t>(i + k * stride[au])];
            if (pos[au] - k >= 0) pair += in[static_cast<std::size_t>(i - k * stride[au])];
            axis += fd6_weights[static_cast<std::size_t>(k)] * pair;
          }
          acc += inv_h2[au] * axis;
        }
        out[static_cast<std::size_t>(i)] = acc;
      }
    }
  }
}

/// H = -Laplacian/2 + diag, with the 6th-order Dirichlet Laplacian.
class FdOperator {
 public:
  FdOperator() = default;
  FdOperator(Grid grid, RealArray diag) : grid_(std::move(grid)), diag_(std::move(diag)) {
    if (diag_.size() != grid_.size()) throw ShapeError("fd operator: diagonal does not match grid");
  }

  const Grid& grid() const noexcept { return grid_; }
  const RealArray& diagonal() const noexcept { return diag_; }
  std::size_t size() const noexcept { return diag_.size(); }

  template <class T>
  void apply(std::span<const T> x, std::span<T> y) const {
    fd_laplacian<T>(grid_, x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = -0.5 * y[i] + diag_[i] * x[i];
  }

 private:
  Grid grid_;
  RealArray diag_;
};

}  // namespace gpeopt
