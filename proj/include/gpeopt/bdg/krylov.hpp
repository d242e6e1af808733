#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gpeopt/core/error.hpp"

namespace gpeopt {

using LinearMap = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct BicgstabResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Right-preconditioned BiCGSTAB for A x = b; x holds the initial guess.
inline BicgstabResult bicgstab(const LinearMap& apply, const LinearMap& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                               double tol, int max_iter) {
  const Eigen::Index n = b.size();
  BicgstabResult res;
  const double bnorm = std::sqrt(b.dot(b));
  if (bnorm == 0.0) {
    x.setZero(n);
    res.converged = true;
    return res;
  }
  Eigen::VectorXd r(n), rhat(n), p(n), v(n), s(n), t(n), ph(n), sh(n);
  if (x.size() != n) x.setZero(n);
  apply(x, r);
  r = b - r;
  rhat = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  v.setZero();
  p.setZero();
  for (int it = 1; it <= max_iter; ++it) {
    const double rho_new = rhat.dot(r);
    if (rho_new == 0.0 || !std::isfinite(rho_new)) break;
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    p = r + beta * (p - omega * v);
    precond(p, ph);
    apply(ph, v);
    const double rv = rhat.dot(v);
    if (rv == 0.0) break;
    alpha = rho / rv;
    s = r - alpha * v;
    const double snorm = std::sqrt(s.dot(s));
    if (snorm <= tol * bnorm) {
      x += alpha * ph;
      res.iterations = it;
      res.relative_residual = snorm / bnorm;
      res.converged = true;
      return res;
    }
    precond(s, sh);
    apply(sh, t);
    const double tt = t.dot(t);
    omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
    x += alpha * ph + omega * sh;
    r = s - omega * t;
    res.iterations = it;
    res.relative_residual = std::sqrt(r.dot(r)) / bnorm;
    if (res.relative_residual <= tol) {
      res.converged = true;
      return res;
    }
    if (omega == 0.0) break;
  }
  // Report the true residual on exit.
  apply(x, r);
  r = b - r;
  res.relative_residual = std::sqrt(r.dot(r)) / bnorm;
  res.converged = res.relative_residual <= tol;
  return res;
}

struct EigsOptions {
  int nev = 3;
  int basis_size = 0;  ///< 0: max(2 nev + 10, 20)
  double tol = 1e-12;  ///< relative Ritz residual |beta s_m| / |theta|
  int max_restarts = 300;
  unsigned seed = 7;
};

struct EigsResult {
  std::vector<double> values;  ///< largest |theta| first
  Eigen::MatrixXd vectors;     ///< unit columns
  std::vector<double> residual_estimates;
  int restarts = 0;
  bool converged = false;
};

/// Largest-magnitude eigenpairs of a real operator whose spectrum is real,
/// by Arnoldi with thick restarts. Kept Ritz vectors are real eigenvectors of
/// the projected matrix, so their span is invariant under it and the restarted
/// Krylov decomposition op V = V H + f e^T stays exact.
inline EigsResult krylov_eigs(const LinearMap& op, Eigen::Index n, const EigsOptions& o) {
  const int nev = o.nev;
  const int m = std::min<Eigen::Index>(o.basis_size > 0 ? o.basis_size : std::max(2 * nev + 10, 20), n);
  if (nev < 1 || nev >= m) throw ConfigError("eigensolver: need 1 <= nev < basis size");
  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  {
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) V(i, 0) = u(rng);
    V.col(0) /= std::sqrt(V.col(0).dot(V.col(0)));
  }
  int k = 0;  // columns already in the decomposition
  Eigen::VectorXd w(n), h(m + 1);
  EigsResult res;
  for (int restart = 0; restart <= o.max_restarts; ++restart) {
    for (int j = k; j < m; ++j) {
      op(V.col(j), w);
      // Classical Gram-Schmidt, repeated once for stability.
      h.setZero();
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd c = V.leftCols(j + 1).transpose() * w;
        w.noalias() -= V.leftCols(j + 1) * c;
        h.head(j + 1) += c;
      }
      const double beta = std::sqrt(w.dot(w));
      H.col(j).head(j + 1) = h.head(j + 1);
      H(j + 1, j) = beta;
      if (beta == 0.0) throw NumericalError("eigensolver: invariant subspace found (breakdown)");
      V.col(j + 1) = w / beta;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(H.topRows(m));
    const Eigen::VectorXcd ev = es.eigenvalues();
    const Eigen::MatrixXcd S = es.eigenvectors();
    std::vector<int> order(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(ev[a]) > std::abs(ev[b]); });

    const double beta = H(m, m - 1);
    auto estimate = [&](int idx) {
      Eigen::VectorXd s = S.col(idx).real();
      if (s.norm() == 0.0) s = S.col(idx).imag();
      s.normalize();
      return std::abs(beta * s[m - 1]);
    };
    bool done = true;
    for (int i = 0; i < nev; ++i) {
      const int idx = order[static_cast<std::size_t>(i)];
      if (std::abs(ev[idx].imag()) > 1e-8 * std::abs(ev[idx]) || estimate(idx) > o.tol * std::abs(ev[idx])) done = false;
    }
    res.restarts = restart;
    if (done || restart == o.max_restarts) {
      res.converged = done;
      res.values.clear();
      res.residual_estimates.clear();
      res.vectors.resize(n, nev);
      for (int i = 0; i < nev; ++i) {
        const int idx = order[static_cast<std::size_t>(i)];
        Eigen::VectorXd s = S.col(idx).real();
        if (s.norm() == 0.0) s = S.col(idx).imag();
        s.normalize();
        res.values.push_back(ev[idx].real());
        res.residual_estimates.push_back(estimate(idx));
        Eigen::VectorXd y = V.leftCols(m) * s;
        res.vectors.col(i) = y / std::sqrt(y.dot(y));
      }
      return res;
    }

    // Thick restart on the wanted half of the spectrum; complex pairs (only
    // from round-off) contribute their real and imaginary parts.
    const int keep_target = std::min(m - 2, nev + (m - nev) / 2);
    Eigen::MatrixXd Y(m, 0);
    for (int i = 0; i < m && Y.cols() < keep_target; ++i) {
      const int idx = order[static_cast<std::size_t>(i)];
      if (ev[idx].imag() < 0.0) continue;
      Y.conservativeResize(Eigen::NoChange, Y.cols() + 1);
      Y.col(Y.cols() - 1) = S.col(idx).real();
      if (ev[idx].imag() > 0.0) {
        Y.conservativeResize(Eigen::NoChange, Y.cols() + 1);
        Y.col(Y.cols() - 1) = S.col(idx).imag();
      }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, Y.cols());
    k = static_cast<int>(Q.cols());
    const Eigen::MatrixXd Hk = Q.transpose() * H.topRows(m) * Q;
    const Eigen::RowVectorXd tail = beta * Q.row(m - 1);
    const Eigen::MatrixXd Vk = V.leftCols(m) * Q;
    V.leftCols(k) = Vk;
    V.col(k) = V.col(m);
    H.setZero();
    H.topLeftCorner(k, k) = Hk;
    H.row(k).head(k) = tail;
  }
  return res;
}

}  // namespace gpeopt
