#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <span>

#include "gpeopt/core/error.hpp"
#include "gpeopt/core/fft.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/core/parallel.hpp"

namespace gpeopt {

/// Spectral free flight and pointwise phase kernels for one grid. Kinetic
/// factors are cached per time step; the 1/J DFT normalization is folded
/// into them.
class SplitStep {
 public:
  explicit SplitStep(const Grid& grid)
      : grid_(grid), plan_(std::make_shared<FftPlan>(grid)), k2_(squared_wavenumbers(grid)) {}

  const Grid& grid() const noexcept { return grid_; }
  const FftPlan& plan() const noexcept { return *plan_; }
  std::span<const double> k2() const noexcept { return k2_; }

  /// psi <- exp(-i k^2 dt/2) psi in Fourier space (dt may be negative).
  void free_flight(std::span<cplx> psi, double dt) {
    if (dt != real_dt_) {
      const double scale = 1.0 / static_cast<double>(k2_.size());
      real_factor_.resize(k2_.size());
      parallel_for(k2_.size(), [&](std::size_t i) { real_factor_[i] = std::polar(scale, -0.5 * k2_[i] * dt); });
      real_dt_ = dt;
    }
    apply_spectral(psi, real_factor_);
  }

  /// psi <- exp(-k^2 dtau/2) psi (imaginary-time free flight).
  void diffuse(std::span<cplx> psi, double dtau) {
    if (dtau != imag_dt_) {
      const double scale = 1.0 / static_cast<double>(k2_.size());
      imag_factor_.resize(k2_.size());
      parallel_for(k2_.size(), [&](std::size_t i) { imag_factor_[i] = cplx(scale * std::exp(-0.5 * k2_[i] * dtau), 0.0); });
      imag_dt_ = dtau;
    }
    apply_spectral(psi, imag_factor_);
  }

  /// psi <- exp(-i (w_a V_a + w_b V_b + g|psi|^2) dt) psi pointwise. w_b may be
  /// zero, in which case V_b is not read.
  static void phase(std::span<cplx> psi, std::span<const double> va, double wa, std::span<const double> vb, double wb, double g,
                    double dt) {
    if (wb == 0.0) {
      parallel_for(psi.size(), [&](std::size_t i) {
        const double th = -(wa * va[i] + g * std::norm(psi[i])) * dt;
        psi[i] *= cplx(std::cos(th), std::sin(th));
      });
    } else {
      parallel_for(psi.size(), [&](std::size_t i) {
        const double th = -(wa * va[i] + wb * vb[i] + g * std::norm(psi[i])) * dt;
        psi[i] *= cplx(std::cos(th), std::sin(th));
      });
    }
  }

  /// psi <- exp(-(V + g|psi|^2) dtau) psi pointwise.
  static void damp(std::span<cplx> psi, std::span<const double> v, double g, double dtau) {
    parallel_for(psi.size(), [&](std::size_t i) { psi[i] *= std::exp(-(v[i] + g * std::norm(psi[i])) * dtau); });
  }

  /// One Strang step: half phase, free flight, half phase with the
  /// post-flight density. With dt < 0 this is the exact inverse of the step
  /// with |dt|, because phase rotations leave |psi| unchanged.
  void strang_step(std::span<cplx> psi, std::span<const double> v_mid, double g, double dt) {
    check(psi, v_mid);
    phase(psi, v_mid, 1.0, {}, 0.0, g, 0.5 * dt);
    free_flight(psi, dt);
    phase(psi, v_mid, 1.0, {}, 0.0, g, 0.5 * dt);
  }

  /// Imaginary-time Strang step (dt -> -i dtau), without renormalization.
  /// The nonlinear sub-steps use the density of the normalized state: the
  /// norm decays during the step, and using the raw density would bias the
  /// fixed point at first order in dtau.
  void imaginary_step(std::span<cplx> psi, std::span<const double> v, double g, double dtau) {
    check(psi, v);
    const double dv = grid_.cell_volume();
    const double g_in = g == 0.0 ? 0.0 : g / norm_squared(psi, dv);
    damp(psi, v, g_in, 0.5 * dtau);
    diffuse(psi, dtau);
    const double g_out = g == 0.0 ? 0.0 : g / norm_squared(psi, dv);
    damp(psi, v, g_out, 0.5 * dtau);
  }

 private:
  void apply_spectral(std::span<cplx> psi, const ComplexArray& factor) {
    plan_->forward(psi);
    parallel_for(psi.size(), [&](std::size_t i) { psi[i] *= factor[i]; });
    plan_->backward(psi);
  }

  void check(std::span<const cplx> psi, std::span<const double> v) const {
    if (psi.size() != k2_.size() || v.size() != k2_.size()) throw ShapeError("split step: array size does not match grid");
  }

  Grid grid_;
  std::shared_ptr<FftPlan> plan_;
  RealArray k2_;
  ComplexArray real_factor_, imag_factor_;
  double real_dt_ = std::nan(""), imag_dt_ = std::nan("");
};

/// Free-standing Strang step on a field (builds a transient SplitStep).
inline ComplexField strang_step(const ComplexField& psi, const RealField& v_mid, double g, double dt) {
  require_same_grid(psi, v_mid, "strang_step");
  if (!all_finite(std::span<const cplx>(psi.values)) || !all_finite(std::span<const double>(v_mid.values)))
    throw NumericalError("strang_step: non-finite input");
  SplitStep s(psi.grid);
  ComplexField out = psi;
  s.strang_step(out.values, v_mid.values, g, dt);
  return out;
}

}  // namespace gpeopt
