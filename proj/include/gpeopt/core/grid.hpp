#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gpeopt/core/error.hpp"

namespace gpeopt {

using Vec3 = std::array<double, 3>;

/// Uniform periodic Cartesian grid in one or three dimensions.
///
/// Axis a covers [-L_a/2, L_a/2) with J_a points x_j = -L_a/2 + j*dx_a. Values
/// on the grid are stored x-major / z-fastest: index = (ix*Jy + iy)*Jz + iz.
/// A rank-1 grid is the x axis; its points sit at (x, 0, 0).
class Grid {
 public:
  Grid() = default;

  Grid(std::vector<int> points, std::vector<double> half_lengths)
      : points_(std::move(points)), half_lengths_(std::move(half_lengths)) {
    if (points_.size() != half_lengths_.size()) throw ShapeError("grid: points/extent rank mismatch");
    if (points_.size() != 1 && points_.size() != 3) throw ShapeError("grid: rank must be 1 or 3");
    for (std::size_t a = 0; a < points_.size(); ++a) {
      if (points_[a] < 8 || points_[a] % 2 != 0)
        throw ShapeError("grid: every axis needs an even point count >= 8 (axis " + std::to_string(a) + ")");
      if (!(half_lengths_[a] > 0.0) || !std::isfinite(half_lengths_[a]))
        throw ShapeError("grid: half-lengths must be positive and finite");
    }
    const std::size_t r = points_.size();
    spacing_.resize(r);
    coords_.resize(r);
    wavenumbers_.resize(r);
    for (std::size_t a = 0; a < r; ++a) {
      const int J = points_[a];
      const double L = 2.0 * half_lengths_[a];
      spacing_[a] = L / J;
      coords_[a].resize(static_cast<std::size_t>(J));
      wavenumbers_[a].resize(static_cast<std::size_t>(J));
      for (int j = 0; j < J; ++j) {
        coords_[a][static_cast<std::size_t>(j)] = -half_lengths_[a] + j * spacing_[a];
        const int f = j < J / 2 ? j : j - J;
        wavenumbers_[a][static_cast<std::size_t>(j)] = 2.0 * std::numbers::pi * f / L;
      }
    }
  }

  int rank() const noexcept { return static_cast<int>(points_.size()); }
  std::size_t size() const noexcept {
    std::size_t n = points_.empty() ? 0 : 1;
    for (int p : points_) n *= static_cast<std::size_t>(p);
    return n;
  }
  const std::vector<int>& points() const noexcept { return points_; }
  const std::vector<double>& half_lengths() const noexcept { return half_lengths_; }
  int points(int axis) const { return points_.at(static_cast<std::size_t>(axis)); }
  double half_length(int axis) const { return half_lengths_.at(static_cast<std::size_t>(axis)); }
  double length(int axis) const { return 2.0 * half_length(axis); }
  double spacing(int axis) const { return spacing_.at(static_cast<std::size_t>(axis)); }
  double cell_volume() const noexcept {
    double v = 1.0;
    for (double h : spacing_) v *= h;
    return v;
  }
  std::span<const double> coordinates(int axis) const { return coords_.at(static_cast<std::size_t>(axis)); }
  std::span<const double> wavenumbers(int axis) const { return wavenumbers_.at(static_cast<std::size_t>(axis)); }

  /// Points along y and z (1 for a rank-1 grid), used by the index helpers.
  int ny() const noexcept { return rank() == 3 ? points_[1] : 1; }
  int nz() const noexcept { return rank() == 3 ? points_[2] : 1; }

  std::size_t index(int ix, int iy, int iz) const noexcept {
    return (static_cast<std::size_t>(ix) * ny() + static_cast<std::size_t>(iy)) * nz() + static_cast<std::size_t>(iz);
  }

  /// Physical position of a linear index; unused coordinates are zero.
  Vec3 position(std::size_t idx) const noexcept {
    if (rank() == 1) return {coords_[0][idx], 0.0, 0.0};
    const std::size_t nyz = static_cast<std::size_t>(ny()) * nz();
    const std::size_t ix = idx / nyz;
    const std::size_t iy = (idx / nz()) % ny();
    const std::size_t iz = idx % nz();
    return {coords_[0][ix], coords_[1][iy], coords_[2][iz]};
  }

  /// Linear index of the grid point closest to the origin (x = y = z = 0).
  std::size_t origin_index() const noexcept {
    if (rank() == 1) return static_cast<std::size_t>(points_[0] / 2);
    return index(points_[0] / 2, points_[1] / 2, points_[2] / 2);
  }

  bool operator==(const Grid& o) const { return points_ == o.points_ && half_lengths_ == o.half_lengths_; }

 private:
  std::vector<int> points_;
  std::vector<double> half_lengths_;
  std::vector<double> spacing_;
  std::vector<std::vector<double>> coords_;
  std::vector<std::vector<double>> wavenumbers_;
};

/// Calls f(idx, x, y, z) for every grid point; the outer axis is parallel.
template <class F>
void for_each_point(const Grid& grid, F&& f) {
  if (grid.rank() == 1) {
    const auto xs = grid.coordinates(0);
    for (std::size_t i = 0; i < xs.size(); ++i) f(i, xs[i], 0.0, 0.0);
    return;
  }
  const auto xs = grid.coordinates(0);
  const auto ys = grid.coordinates(1);
  const auto zs = grid.coordinates(2);
  const std::size_t ny = ys.size(), nz = zs.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t ix = 0; ix < static_cast<std::ptrdiff_t>(xs.size()); ++ix) {
    std::size_t idx = static_cast<std::size_t>(ix) * ny * nz;
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t iz = 0; iz < nz; ++iz, ++idx) f(idx, xs[static_cast<std::size_t>(ix)], ys[iy], zs[iz]);
  }
}

}  // namespace gpeopt
