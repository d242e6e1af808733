#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/core/grid.hpp"
#include "gpeopt/core/parallel.hpp"
#include "gpeopt/potentials/saturation.hpp"

namespace gpeopt {

// All parameters are dimensionless: angular frequencies in 1/t0, energies in
// hbar/t0, lengths in l0.

/// V = (wx(l1)^2 x^2 + wy(l2)^2 y^2 + wz^2 z^2)/2 with linear frequency ramps.
struct HarmonicTwoParam {
  double wx_i = 1.0, wx_f = 1.0, wy_i = 1.0, wy_f = 1.0, wz = 1.0;
};

/// Harmonic trap with a ramped x frequency plus a repulsive Gaussian barrier
/// V0* chi(l2) exp(-2(x^2+y^2)/w0^2).
struct ToroidalTwoParam {
  double wx_i = 1.0, wx_f = 1.0, wy = 1.0, wz = 1.0;
  double v0_star = 0.0, w0 = 1.0;
  SaturationCurve chi;
};

/// RF-dressed Ioffe-Pritchard trap. The field is kept in frequency units,
/// b = m_F g_F mu_B B / hbar, so b0 = omega0, b1 = omega_perp sqrt(omega0) and
/// b2 = omega_par^2 (unit mass). The dressed potential is
/// m~_F sqrt(D(r)^2 + Omega(l1)^2 P(r)^2) with D(r) = omega_RF - |b(r)|/m_F.
struct RfSplit {
  enum class Coupling {
    /// Only the RF component perpendicular to the local static field couples;
    /// the dressing field is linearly polarized along x, P = |b x e_x|/|b|.
    projected,
    /// P = 1 everywhere.
    uniform,
  };

  double omega0 = 1.0, omega_perp = 1.0, omega_par = 1.0;
  double g_F = 0.5, m_F = 2.0, m_tilde = 2.0;
  double detuning0 = 0.0;  ///< D(0), angular
  double rabi_star = 1.0;
  SaturationCurve chi;
  bool two_param = false;  ///< omega_par(l2) = omega_par * l2
  Coupling coupling = Coupling::projected;

  double omega_rf() const noexcept { return detuning0 + omega0 / m_F; }
};

enum class JacobianMethod { analytic, complex_step, central_difference };

inline constexpr double complex_step_h = 1e-20;
inline constexpr double central_difference_h = 1e-6;

class TrapModel {
 public:
  using Variant = std::variant<HarmonicTwoParam, ToroidalTwoParam, RfSplit>;

  TrapModel() = default;
  TrapModel(Variant v) : v_(std::move(v)) { validate(); }  // NOLINT: implicit by design

  const Variant& variant() const noexcept { return v_; }

  int components() const {
    if (const auto* rf = std::get_if<RfSplit>(&v_)) return rf->two_param ? 2 : 1;
    return 2;
  }

  std::string name() const {
    switch (v_.index()) {
      case 0: return "harmonic-2p";
      case 1: return "toroidal-2p";
      default: return std::get<RfSplit>(v_).two_param ? "rf-split-2p" : "rf-split-1p";
    }
  }

  /// Raw potential at one point; T = double or std::complex<double>.
  template <class T>
  T value(std::span<const T> lambda, double x, double y, double z) const {
    return std::visit([&](const auto& m) { return eval(m, lambda, x, y, z); }, v_);
  }

  /// Derivative of the raw potential with respect to every control component
  /// at one point, written to out[0..m).
  void analytic_gradient(std::span<const double> lambda, double x, double y, double z, std::span<double> out) const {
    std::visit([&](const auto& m) { grad(m, lambda, x, y, z, out); }, v_);
  }

 private:
  void validate() const {
    auto pos = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("trap: ") + what + " must be positive");
    };
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, HarmonicTwoParam>) {
            pos(m.wx_i, "omega_x_i"), pos(m.wx_f, "omega_x_f"), pos(m.wy_i, "omega_y_i"), pos(m.wy_f, "omega_y_f"), pos(m.wz, "omega_z");
          } else if constexpr (std::is_same_v<M, ToroidalTwoParam>) {
            pos(m.wx_i, "omega_x_i"), pos(m.wx_f, "omega_x_f"), pos(m.wy, "omega_y"), pos(m.wz, "omega_z"), pos(m.w0, "w0");
            if (!(m.v0_star >= 0.0)) throw ConfigError("trap: v0_star must be non-negative");
          } else {
            pos(m.omega0, "omega0"), pos(m.omega_perp, "omega_perp"), pos(m.omega_par, "omega_par");
            pos(m.g_F, "g_F"), pos(m.m_F, "m_F"), pos(m.m_tilde, "m_tilde"), pos(m.rabi_star, "rabi_star");
          }
        },
        v_);
  }

  template <class T>
  static T eval(const HarmonicTwoParam& m, std::span<const T> l, double x, double y, double z) {
    const T wx = m.wx_i + l[0] * (m.wx_f - m.wx_i);
    const T wy = m.wy_i + l[1] * (m.wy_f - m.wy_i);
    return 0.5 * (wx * wx * (x * x) + wy * wy * (y * y) + T(m.wz * m.wz * z * z));
  }
  static void grad(const HarmonicTwoParam& m, std::span<const double> l, double x, double y, double, std::span<double> out) {
    out[0] = (m.wx_i + l[0] * (m.wx_f - m.wx_i)) * (m.wx_f - m.wx_i) * x * x;
    out[1] = (m.wy_i + l[1] * (m.wy_f - m.wy_i)) * (m.wy_f - m.wy_i) * y * y;
  }

  template <class T>
  static T eval(const ToroidalTwoParam& m, std::span<const T> l, double x, double y, double z) {
    const T wx = m.wx_i + l[0] * (m.wx_f - m.wx_i);
    const double gauss = std::exp(-2.0 * (x * x + y * y) / (m.w0 * m.w0));
    return 0.5 * (wx * wx * (x * x) + T(m.wy * m.wy * y * y + m.wz * m.wz * z * z)) + m.v0_star * m.chi.value(l[1]) * gauss;
  }
  static void grad(const ToroidalTwoParam& m, std::span<const double> l, double x, double y, double, std::span<double> out) {
    out[0] = (m.wx_i + l[0] * (m.wx_f - m.wx_i)) * (m.wx_f - m.wx_i) * x * x;
    out[1] = m.v0_star * m.chi.derivative(l[1]) * std::exp(-2.0 * (x * x + y * y) / (m.w0 * m.w0));
  }

 public:
  /// Scaled Ioffe-Pritchard field (b_x, b_y, b_z) for a given omega_par.
  template <class T>
  static std::array<T, 3> ioffe(const RfSplit& m, T omega_par, double x, double y, double z) {
    const double b0 = m.omega0;
    const double b1 = m.omega_perp * std::sqrt(m.omega0);
    const T b2 = omega_par * omega_par;
    const T bx = b1 * x - 0.5 * b2 * (x * y);
    const T by = b0 + 0.5 * b2 * (y * y - 0.5 * (x * x + z * z));
    const T bz = -b1 * z - 0.5 * b2 * (z * y);
    return {bx, by, bz};
  }

 private:
  template <class T>
  static T eval(const RfSplit& m, std::span<const T> l, double x, double y, double z) {
    const T wpar = m.two_param ? T(m.omega_par) * l[1] : T(m.omega_par);
    const auto [bx, by, bz] = ioffe(m, wpar, x, y, z);
    const T b2 = bx * bx + by * by + bz * bz;
    const T bnorm = std::sqrt(b2);
    const T det = m.omega_rf() - bnorm / m.m_F;
    const T omega = m.rabi_star * m.chi.value(l[0]);
    const T p2 = m.coupling == RfSplit::Coupling::projected ? (by * by + bz * bz) / b2 : T(1.0);
    return m.m_tilde * std::sqrt(det * det + omega * omega * p2);
  }
  static void grad(const RfSplit& m, std::span<const double> l, double x, double y, double z, std::span<double> out) {
    const double wpar = m.two_param ? m.omega_par * l[1] : m.omega_par;
    const auto [bx, by, bz] = ioffe(m, wpar, x, y, z);
    const double b2sq = bx * bx + by * by + bz * bz;
    const double bn = std::sqrt(b2sq);
    const double det = m.omega_rf() - bn / m.m_F;
    const double chi = m.chi.value(l[0]);
    const double omega = m.rabi_star * chi;
    const bool proj = m.coupling == RfSplit::Coupling::projected;
    const double p2 = proj ? (by * by + bz * bz) / b2sq : 1.0;
    const double root = std::sqrt(det * det + omega * omega * p2);
    out[0] = root > 0.0 ? m.m_tilde * omega * p2 * m.rabi_star * m.chi.derivative(l[0]) / root : 0.0;
    if (!m.two_param) return;
    // d/d l2 through b2 = (omega_par l2)^2.
    const double db2 = 2.0 * m.omega_par * m.omega_par * l[1];
    const double dbx = -0.5 * x * y * db2;
    const double dbz = -0.5 * z * y * db2;
    const double dby = 0.5 * (y * y - 0.5 * (x * x + z * z)) * db2;
    const double dbn = (bx * dbx + by * dby + bz * dbz) / bn;
    const double ddet = -dbn / m.m_F;
    const double dp2 = proj ? -2.0 * bx * (dbx * bn - bx * dbn) / (b2sq * bn) : 0.0;
    out[1] = root > 0.0 ? m.m_tilde * (det * ddet + 0.5 * omega * omega * dp2) / root : 0.0;
  }

  Variant v_ = HarmonicTwoParam{};
};

/// Scaled field and its magnitude at r, returned in (x, y, z) order.
inline std::pair<Vec3, double> ioffe_field(const TrapModel& model, std::span<const double> lambda, const Vec3& r) {
  const auto* rf = std::get_if<RfSplit>(&model.variant());
  if (!rf) throw ConfigError("ioffe_field: model is not an rf-split trap");
  const double wpar = rf->two_param ? rf->omega_par * lambda[1] : rf->omega_par;
  const auto [bx, by, bz] = TrapModel::ioffe(*rf, wpar, r[0], r[1], r[2]);
  return {{bx, by, bz}, std::sqrt(bx * bx + by * by + bz * bz)};
}

inline void check_lambda(const TrapModel& model, std::size_t n) {
  if (n != static_cast<std::size_t>(model.components()))
    throw ConfigError("trap " + model.name() + ": expected " + std::to_string(model.components()) + " control values, got " +
                      std::to_string(n));
}

/// Potential without offset removal.
inline RealField eval_potential_raw(const TrapModel& model, std::span<const double> lambda, const Grid& grid) {
  check_lambda(model, lambda.size());
  RealField v(grid);
  for_each_point(grid, [&](std::size_t i, double x, double y, double z) { v.values[i] = model.value(lambda, x, y, z); });
  if (!all_finite(std::span<const double>(v.values))) throw NumericalError("trap " + model.name() + ": non-finite potential");
  return v;
}

/// Potential with its grid minimum subtracted, so min(V) = 0 exactly.
inline RealField eval_potential(const TrapModel& model, std::span<const double> lambda, const Grid& grid) {
  RealField v = eval_potential_raw(model, lambda, grid);
  double lo = std::numeric_limits<double>::infinity();
  for (double x : v.values) lo = std::min(lo, x);
  for (double& x : v.values) x -= lo;
  return v;
}

/// dV/d lambda_j of the raw potential for every component j.
inline std::vector<RealField> eval_potential_jacobian(const TrapModel& model, std::span<const double> lambda, const Grid& grid,
                                                      JacobianMethod method = JacobianMethod::analytic) {
  check_lambda(model, lambda.size());
  const int m = model.components();
  std::vector<RealField> out(static_cast<std::size_t>(m), RealField(grid));
  switch (method) {
    case JacobianMethod::analytic:
      for_each_point(grid, [&](std::size_t i, double x, double y, double z) {
        double g[2] = {0.0, 0.0};
        model.analytic_gradient(lambda, x, y, z, std::span<double>(g, static_cast<std::size_t>(m)));
        for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(j)].values[i] = g[j];
      });
      break;
    case JacobianMethod::complex_step:
      for (int j = 0; j < m; ++j) {
        std::vector<cplx> lc(lambda.begin(), lambda.end());
        lc[static_cast<std::size_t>(j)] += cplx(0.0, complex_step_h);
        auto& f = out[static_cast<std::size_t>(j)].values;
        for_each_point(grid, [&](std::size_t i, double x, double y, double z) {
          f[i] = model.value(std::span<const cplx>(lc), x, y, z).imag() / complex_step_h;
        });
      }
      break;
    case JacobianMethod::central_difference:
      for (int j = 0; j < m; ++j) {
        std::vector<double> lp(lambda.begin(), lambda.end()), lm = lp;
        lp[static_cast<std::size_t>(j)] += central_difference_h;
        lm[static_cast<std::size_t>(j)] -= central_difference_h;
        auto& f = out[static_cast<std::size_t>(j)].values;
        for_each_point(grid, [&](std::size_t i, double x, double y, double z) {
          f[i] = (model.value(std::span<const double>(lp), x, y, z) - model.value(std::span<const double>(lm), x, y, z)) /
                 (2.0 * central_difference_h);
        });
      }
      break;
  }
  for (const auto& f : out)
    if (!all_finite(std::span<const double>(f.values))) throw NumericalError("trap " + model.name() + ": non-finite jacobian");
  return out;
}

}  // namespace gpeopt
