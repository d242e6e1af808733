#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "gpeopt/core/error.hpp"

namespace gpeopt {

/// Uniformly sampled m-component curve on [0, T] with N+1 nodes t_n = n*T/N.
/// samples[n*m + j] holds component j at node n. The same type carries
/// controls, variations, source terms and gradients.
class ControlCurve {
 public:
  ControlCurve() = default;
  ControlCurve(double horizon, int steps, int components)
      : horizon_(horizon), steps_(steps), components_(components),
        samples_(static_cast<std::size_t>(steps + 1) * static_cast<std::size_t>(components), 0.0) {
    if (steps < 2) throw ShapeError("control curve: need at least 2 time steps");
    if (components < 1) throw ShapeError("control curve: need at least one component");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ShapeError("control curve: horizon must be positive");
  }

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  int components() const noexcept { return components_; }
  double dt() const noexcept { return horizon_ / steps_; }
  double time(int n) const noexcept { return n == steps_ ? horizon_ : n * dt(); }

  double& operator()(int n, int j) noexcept { return samples_[static_cast<std::size_t>(n) * components_ + j]; }
  double operator()(int n, int j) const noexcept { return samples_[static_cast<std::size_t>(n) * components_ + j]; }
  std::span<double> node(int n) noexcept { return {samples_.data() + static_cast<std::size_t>(n) * components_, static_cast<std::size_t>(components_)}; }
  std::span<const double> node(int n) const noexcept {
    return {samples_.data() + static_cast<std::size_t>(n) * components_, static_cast<std::size_t>(components_)};
  }
  std::vector<double>& samples() noexcept { return samples_; }
  const std::vector<double>& samples() const noexcept { return samples_; }

  /// Midpoint control (lambda(t_n) + lambda(t_{n+1}))/2.
  std::vector<double> midpoint(int n) const {
    std::vector<double> m(static_cast<std::size_t>(components_));
    for (int j = 0; j < components_; ++j) m[static_cast<std::size_t>(j)] = 0.5 * ((*this)(n, j) + (*this)(n + 1, j));
    return m;
  }

  bool same_sampling(const ControlCurve& o) const noexcept {
    return horizon_ == o.horizon_ && steps_ == o.steps_ && components_ == o.components_;
  }

  /// Samples f(t) (returns an m-vector) at every node.
  static ControlCurve from_function(double horizon, int steps, int components,
                                    const std::function<std::vector<double>(double)>& f) {
    ControlCurve c(horizon, steps, components);
    for (int n = 0; n <= steps; ++n) {
      const auto v = f(c.time(n));
      if (v.size() != static_cast<std::size_t>(components)) throw ShapeError("control curve: generator returned wrong size");
      for (int j = 0; j < components; ++j) c(n, j) = v[static_cast<std::size_t>(j)];
    }
    return c;
  }

  /// Straight line from `start` to `end`.
  static ControlCurve linear(double horizon, int steps, const std::vector<double>& start, const std::vector<double>& end) {
    if (start.size() != end.size()) throw ShapeError("control curve: endpoint sizes differ");
    const int m = static_cast<int>(start.size());
    ControlCurve c(horizon, steps, m);
    for (int n = 0; n <= steps; ++n) {
      const double s = static_cast<double>(n) / steps;
      for (int j = 0; j < m; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        c(n, j) = n == steps ? end[ju] : start[ju] + s * (end[ju] - start[ju]);
      }
    }
    return c;
  }

 private:
  double horizon_ = 0.0;
  int steps_ = 0;
  int components_ = 0;
  std::vector<double> samples_;
};

inline void require_same_sampling(const ControlCurve& a, const ControlCurve& b, const char* what) {
  if (!a.same_sampling(b)) throw ShapeError(std::string(what) + ": curves have different time sampling");
}

/// H^1_0 product: sum over intervals of (du/dt)(dv/dt)*dt with the derivative
/// taken as the central difference at each interval midpoint. This is the
/// second-order rule whose Euler-Lagrange operator is exactly the three-point
/// second difference used by h1_gradient, so h1(G, v) = -sum (D2 G)_n v_n dt
/// holds to rounding for v vanishing at the endpoints.
inline double h1_inner_product(const ControlCurve& u, const ControlCurve& v) {
  require_same_sampling(u, v, "h1_inner_product");
  const int m = u.components();
  const double dt = u.dt();
  double acc = 0.0;
  for (int n = 0; n < u.steps(); ++n)
    for (int j = 0; j < m; ++j) acc += (u(n + 1, j) - u(n, j)) * (v(n + 1, j) - v(n, j));
  return acc / dt;
}

inline double h1_norm(const ControlCurve& u) { return std::sqrt(h1_inner_product(u, u)); }

/// a + alpha*b. Nodes where b is zero (gradient endpoints) keep a's value exactly.
inline ControlCurve axpy(const ControlCurve& a, double alpha, const ControlCurve& b) {
  require_same_sampling(a, b, "axpy");
  ControlCurve out = a;
  auto& s = out.samples();
  const auto& bs = b.samples();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += alpha * bs[i];
  return out;
}

inline double max_abs_difference(const ControlCurve& a, const ControlCurve& b) {
  require_same_sampling(a, b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) m = std::max(m, std::abs(a.samples()[i] - b.samples()[i]));
  return m;
}

namespace detail {

/// Second derivatives of the not-a-knot cubic spline through y on a uniform
/// grid of spacing h.
inline std::vector<double> not_a_knot_moments(std::span<const double> y, double h) {
  const std::size_t N = y.size() - 1;
  std::vector<double> M(N + 1, 0.0);
  if (N == 2) {
    const double c = (y[0] - 2.0 * y[1] + y[2]) / (h * h);
    std::fill(M.begin(), M.end(), c);
    return M;
  }
  // Unknowns M_1..M_{N-1}; M_0 and M_N are eliminated with the not-a-knot
  // conditions M_0 = 2M_1 - M_2 and M_N = 2M_{N-1} - M_{N-2}.
  const std::size_t n = N - 1;
  std::vector<double> a(n, 1.0), b(n, 4.0), c(n, 1.0), d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (h * h);
  b[0] = 6.0;
  c[0] = 0.0;
  b[n - 1] = 6.0;
  a[n - 1] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  for (std::size_t i = 0; i < n; ++i) M[i + 1] = x[i];
  M[0] = 2.0 * M[1] - M[2];
  M[N] = 2.0 * M[N - 1] - M[N - 2];
  return M;
}

}  // namespace detail

/// Cubic (not-a-knot spline) interpolation of every component onto a new
/// uniform grid with `new_steps` intervals. Endpoints are copied, not
/// interpolated.
inline ControlCurve resample_control(const ControlCurve& c, int new_steps) {
  if (new_steps < 2) throw ShapeError("resample_control: need at least 2 time steps");
  ControlCurve out(c.horizon(), new_steps, c.components());
  const int N = c.steps();
  const double h = c.dt();
  std::vector<double> y(static_cast<std::size_t>(N + 1));
  for (int j = 0; j < c.components(); ++j) {
    for (int n = 0; n <= N; ++n) y[static_cast<std::size_t>(n)] = c(n, j);
    const auto M = detail::not_a_knot_moments(y, h);
    for (int k = 0; k <= new_steps; ++k) {
      if (k == 0) {
        out(k, j) = c(0, j);
        continue;
      }
      if (k == new_steps) {
        out(k, j) = c(N, j);
        continue;
      }
      const double s = static_cast<double>(k) / new_steps * N;  // position in old intervals
      const int i = std::clamp(static_cast<int>(std::floor(s)), 0, N - 1);
      const double u = s - i, w = 1.0 - u;  // local coordinates in [0, 1]
      const auto iu = static_cast<std::size_t>(i);
      out(k, j) = w * y[iu] + u * y[iu + 1] + (h * h / 6.0) * ((w * w * w - w) * M[iu] + (u * u * u - u) * M[iu + 1]);
    }
  }
  return out;
}

}  // namespace gpeopt
