#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <vector>

#include "gpeopt/bdg/fd_operator.hpp"
#include "gpeopt/bdg/krylov.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"

namespace gpeopt {

struct BdgOptions {
  int modes = 3;
  double omega_min = 0.0;  ///< smallest trap frequency; sets the default shift and the Goldstone filter
  double sigma = std::numeric_limits<double>::quiet_NaN();  ///< shift in omega^2 units; NaN: (0.1 omega_min)^2
  double goldstone_fraction = 1e-3;
  double residual_tol = 1e-6;  ///< relative BdG residual every returned mode must meet
  EigsOptions eigs;
  double inner_tol = 1e-12;
  int inner_max_iters = 3000;
  double ilut_droptol = 1e-6;
  int ilut_fill = 10;
  int refine_steps = 3;  ///< inverse-iteration sweeps per mode if the residual is above tolerance
};

struct BdgMode {
  double omega = 0.0;
  ComplexField u, v;
  double residual = 0.0;  ///< ||BdG (u,v) - omega (u,v)|| / ||(u,v)||
  double norm = 0.0;      ///< int (u^2 - v^2)
};

struct BdgResult {
  std::vector<BdgMode> modes;
  double sigma = 0.0;
  int discarded = 0;  ///< Goldstone (near-zero) modes removed
  int restarts = 0;
  long inner_iterations = 0;
};

namespace detail {

/// -Lap/2 + diag with the 3-point (2nd-order) Laplacian, Dirichlet exterior.
inline Eigen::SparseMatrix<double> fd2_operator(const Grid& grid, std::span<const double> diag) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const int nx = grid.points(0), ny = grid.ny(), nz = grid.nz();
  const std::array<int, 3> dims = {nx, ny, nz};
  const std::array<Eigen::Index, 3> stride = {static_cast<Eigen::Index>(ny) * nz, nz, 1};
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n) * (1 + 2 * grid.rank()));
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      for (int iz = 0; iz < nz; ++iz) {
        const std::array<int, 3> pos = {ix, iy, iz};
        const Eigen::Index i = ix * stride[0] + iy * stride[1] + iz;
        double d = diag[static_cast<std::size_t>(i)];
        for (int a = 0; a < grid.rank(); ++a) {
          const auto au = static_cast<std::size_t>(a);
          const double c = 0.5 / (grid.spacing(a) * grid.spacing(a));
          d += 2.0 * c;
          if (pos[au] > 0) t.emplace_back(i, i - stride[au], -c);
          if (pos[au] + 1 < dims[au]) t.emplace_back(i, i + stride[au], -c);
        }
        t.emplace_back(i, i, d);
      }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Removes the global phase of a stationary state; the result must be real.
inline RealArray real_stationary_state(const ComplexField& phi) {
  std::size_t imax = 0;
  for (std::size_t i = 0; i < phi.values.size(); ++i)
    if (std::abs(phi.values[i]) > std::abs(phi.values[imax])) imax = i;
  const double amax = std::abs(phi.values[imax]);
  if (!(amax > 0.0)) throw ConfigError("bdg: stationary state is zero");
  const cplx rot = std::conj(phi.values[imax]) / amax;
  RealArray out(phi.values.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const cplx z = phi.values[i] * rot;
    out[i] = z.real();
    worst = std::max(worst, std::abs(z.imag()));
  }
  if (worst > 1e-6 * amax) throw ConfigError("bdg: stationary state is not real up to a global phase");
  return out;
}

struct BdgOperators {
  FdOperator h1, h2, h3;  ///< H0 - mu + c g phi^2 for c = 1, 2, 3 (6th order)

  BdgOperators(const Grid& grid, std::span<const double> phi, std::span<const double> v, double mu, double g) {
    RealArray d1(phi.size()), d2(phi.size()), d3(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const double base = v[i] - mu, gp = g * phi[i] * phi[i];
      d1[i] = base + gp;
      d2[i] = base + 2.0 * gp;
      d3[i] = base + 3.0 * gp;
    }
    h1 = FdOperator(grid, std::move(d1));
    h2 = FdOperator(grid, std::move(d2));
    h3 = FdOperator(grid, std::move(d3));
  }

  static std::span<const double> cs(const Eigen::VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }
  static std::span<double> ms(Eigen::VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

  void apply_h3(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.resize(x.size());
    h3.apply<double>(cs(x), ms(y));
  }
  /// y = H1 H3 x
  void apply_a(const Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::VectorXd& tmp) const {
    tmp.resize(x.size());
    y.resize(x.size());
    h3.apply<double>(cs(x), ms(tmp));
    h1.apply<double>(cs(tmp), ms(y));
  }
};

}  // namespace detail

/// Relative residual of (u, v, omega) against the BdG matrix
/// [[L, M], [-M, -L]], L = H0 - mu + 2g phi^2, M = g phi^2 (real modes).
inline double bdg_residual(const ComplexField& u, const ComplexField& v, double omega, const ComplexField& phi, const RealField& pot,
                           double mu, double g) {
  const RealArray p = detail::real_stationary_state(phi);
  const detail::BdgOperators ops(phi.grid, p, pot.values, mu, g);
  const std::size_t n = p.size();
  ComplexArray lu(n), lv(n);
  ops.h2.apply<cplx>(u.values, lu);
  ops.h2.apply<cplx>(v.values, lv);
  double r2 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = g * p[i] * p[i];
    r2 += std::norm(lu[i] + m * v.values[i] - omega * u.values[i]) + std::norm(-m * u.values[i] - lv[i] - omega * v.values[i]);
    n2 += std::norm(u.values[i]) + std::norm(v.values[i]);
  }
  return std::sqrt(r2 / n2);
}

/// Lowest BdG modes of a real stationary state phi with chemical potential mu.
/// Solves (H0-mu+g phi^2)(H0-mu+3g phi^2) w1 = omega^2 w1 by shift-invert
/// around sigma; inner systems use BiCGSTAB with an incomplete LU of the
/// 2nd-order assembled product as preconditioner.
inline BdgResult solve_bdg(const ComplexField& phi, const RealField& pot, double mu, double g, const BdgOptions& o) {
  require_same_grid(phi, pot, "solve_bdg");
  if (!(o.omega_min > 0.0)) throw ConfigError("bdg: omega_min (smallest trap frequency) must be positive");
  if (o.modes < 1) throw ConfigError("bdg: need at least one mode");
  const Grid& grid = phi.grid;
  const RealArray p = detail::real_stationary_state(phi);
  const detail::BdgOperators ops(grid, p, pot.values, mu, g);
  const auto n = static_cast<Eigen::Index>(p.size());

  BdgResult res;
  res.sigma = std::isnan(o.sigma) ? std::pow(0.1 * o.omega_min, 2) : o.sigma;
  const double goldstone = o.goldstone_fraction * o.omega_min;

  // Preconditioner: ILU of H1_2 H3_2 - sigma I.
  auto preconditioner_for = [&](double shift) {
    RealArray d1(p.size()), d3(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      d1[i] = pot.values[i] - mu + g * p[i] * p[i];
      d3[i] = pot.values[i] - mu + 3.0 * g * p[i] * p[i];
    }
    Eigen::SparseMatrix<double> a = detail::fd2_operator(grid, d1) * detail::fd2_operator(grid, d3);
    Eigen::SparseMatrix<double> id(n, n);
    id.setIdentity();
    a -= shift * id;
    auto ilu = std::make_shared<Eigen::IncompleteLUT<double>>();
    ilu->setDroptol(o.ilut_droptol);
    ilu->setFillfactor(o.ilut_fill);
    ilu->compute(a);
    if (ilu->info() != Eigen::Success) throw NumericalError("bdg: incomplete LU factorization failed");
    return ilu;
  };

  Eigen::VectorXd tmp;
  auto shifted_solve = [&](double shift, const std::shared_ptr<Eigen::IncompleteLUT<double>>& ilu, const Eigen::VectorXd& b,
                           Eigen::VectorXd& x) {
    auto apply = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
      ops.apply_a(in, out, tmp);
      out -= shift * in;
    };
    auto prec = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out = ilu->solve(in); };
    x.setZero(n);
    const auto r = bicgstab(apply, prec, b, x, o.inner_tol, o.inner_max_iters);
    res.inner_iterations += r.iterations;
    return r;
  };

  const auto ilu = preconditioner_for(res.sigma);
  auto op = [&](const Eigen::VectorXd& b, Eigen::VectorXd& x) {
    const auto r = shifted_solve(res.sigma, ilu, b, x);
    if (!r.converged) {
      std::ostringstream os;
      os << "bdg: inner BiCGSTAB stagnated at relative residual " << r.relative_residual << " after " << r.iterations
         << " iterations (ILUT droptol " << o.ilut_droptol << ", fill " << o.ilut_fill << ", shift " << res.sigma << ")";
      throw NumericalError(os.str());
    }
  };

  // Room for the Goldstone modes: one per disconnected condensate part, so
  // two for a split double well. More are requested if that was too few.
  auto ritz_lambda = [&](const EigsResult& er, int i) { return res.sigma + 1.0 / er.values[static_cast<std::size_t>(i)]; };
  EigsOptions eo = o.eigs;
  EigsResult er;
  for (int extra = 2;; ) {
    eo.nev = o.modes + extra;
    er = krylov_eigs(op, n, eo);
    res.restarts += er.restarts;
    if (!er.converged) throw NumericalError("bdg: shift-invert eigensolver did not converge");
    int near_zero = 0;
    for (int i = 0; i < eo.nev; ++i) near_zero += std::sqrt(std::abs(ritz_lambda(er, i))) < goldstone;
    if (eo.nev - near_zero >= o.modes || extra >= 8) break;
    extra = near_zero + 1;
  }

  const double dv = grid.cell_volume();
  auto build_mode = [&](const Eigen::VectorXd& w1, double lambda) {
    BdgMode m;
    m.omega = std::sqrt(lambda);
    Eigen::VectorXd w2;
    ops.apply_h3(w1, w2);
    w2 *= -1.0 / m.omega;
    m.u = ComplexField(grid);
    m.v = ComplexField(grid);
    double nrm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ui = 0.5 * (w1[i] - w2[i]), vi = 0.5 * (w1[i] + w2[i]);
      m.u.values[static_cast<std::size_t>(i)] = ui;
      m.v.values[static_cast<std::size_t>(i)] = vi;
      nrm += (ui * ui - vi * vi) * dv;
    }
    if (!(nrm > 0.0)) throw NumericalError("bdg: mode with non-positive symplectic norm");
    const double s = 1.0 / std::sqrt(nrm);
    for (auto& x : m.u.values) x *= s;
    for (auto& x : m.v.values) x *= s;
    m.norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      m.norm += (std::norm(m.u.values[k]) - std::norm(m.v.values[k])) * dv;
    }
    m.residual = bdg_residual(m.u, m.v, m.omega, phi, pot, mu, g);
    return m;
  };

  for (int i = 0; i < eo.nev; ++i) {
    const double lambda = ritz_lambda(er, i);
    if (std::sqrt(std::abs(lambda)) < goldstone) {
      ++res.discarded;
      continue;
    }
    if (lambda < 0.0) {
      std::ostringstream os;
      os << "bdg: negative eigenvalue omega^2 = " << lambda << "; the input is not a ground state";
      throw NumericalError(os.str());
    }
    Eigen::VectorXd w1 = er.vectors.col(i);
    BdgMode m = build_mode(w1, lambda);
    // Inverse iteration at the fixed Ritz shift sharpens modes the outer
    // tolerance left above the residual target; the eigenvalue estimate is
    // the Rayleigh quotient in the H3 inner product, in which A is symmetric.
    if (m.residual > o.residual_tol && o.refine_steps > 0) {
      const auto ilu_l = preconditioner_for(lambda);
      for (int step = 0; step < o.refine_steps && m.residual > o.residual_tol; ++step) {
        Eigen::VectorXd z;
        shifted_solve(lambda, ilu_l, w1, z);
        w1 = z / z.norm();
        Eigen::VectorXd aw, hw;
        ops.apply_a(w1, aw, tmp);
        ops.apply_h3(w1, hw);
        m = build_mode(w1, hw.dot(aw) / hw.dot(w1));
      }
    }
    res.modes.push_back(std::move(m));
  }
  std::sort(res.modes.begin(), res.modes.end(), [](const BdgMode& a, const BdgMode& b) { return a.omega < b.omega; });
  if (res.modes.size() > static_cast<std::size_t>(o.modes)) res.modes.resize(static_cast<std::size_t>(o.modes));
  for (std::size_t i = 0; i < res.modes.size(); ++i) {
    if (res.modes[i].residual > o.residual_tol) {
      std::ostringstream os;
      os << "bdg: mode " << i << " (omega " << res.modes[i].omega << ") has residual " << res.modes[i].residual << " above "
         << o.residual_tol;
      throw NumericalError(os.str());
    }
  }
  return res;
}

}  // namespace gpeopt
