#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "gpeopt/core/error.hpp"

namespace gpeopt {

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes, the
/// same rule as MATLAB's pchip) through a set of knots, clamped to the end
/// values outside the knot span.
class SaturationCurve {
 public:
  using Knot = std::pair<double, double>;

  static std::vector<Knot> default_knots() { return {{-0.5, 0.0}, {0.0, 0.0}, {0.5, 0.4}, {1.0, 1.0}, {1.5, 1.15}}; }

  SaturationCurve() : SaturationCurve(default_knots()) {}

  explicit SaturationCurve(std::vector<Knot> knots) : knots_(std::move(knots)) {
    if (knots_.size() < 2) throw ConfigError("saturation: need at least two knots");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      if (!(knots_[i].first > knots_[i - 1].first)) throw ConfigError("saturation: knot positions must increase");
    bool has0 = false, has1 = false;
    for (const auto& [s, v] : knots_) {
      if (s == 0.0) has0 = v == 0.0;
      if (s == 1.0) has1 = v == 1.0;
      if (v < 0.0) throw ConfigError("saturation: knot values must be non-negative");
    }
    if (!has0 || !has1) throw ConfigError("saturation: knots (0, 0) and (1, 1) are required");
    slopes_ = pchip_slopes(knots_);
  }

  const std::vector<Knot>& knots() const noexcept { return knots_; }
  const std::vector<double>& slopes() const noexcept { return slopes_; }

  /// chi(s). Templated so complex-step differentiation passes through: the
  /// interval is chosen from Re(s) and the cubic is evaluated in T.
  template <class T>
  T value(T s) const {
    const double r = real_part(s);
    if (r <= knots_.front().first) return T(knots_.front().second);
    if (r >= knots_.back().first) return T(knots_.back().second);
    const std::size_t k = interval(r);
    const double h = knots_[k + 1].first - knots_[k].first;
    const T t = (s - T(knots_[k].first)) / h;
    const T t2 = t * t, t3 = t2 * t;
    const T h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const T h10 = t3 - 2.0 * t2 + t;
    const T h01 = -2.0 * t3 + 3.0 * t2;
    const T h11 = t3 - t2;
    return h00 * knots_[k].second + h10 * (h * slopes_[k]) + h01 * knots_[k + 1].second + h11 * (h * slopes_[k + 1]);
  }

  double operator()(double s) const { return value(s); }

  /// chi'(s); zero outside the knot span.
  double derivative(double s) const {
    if (s <= knots_.front().first || s >= knots_.back().first) return 0.0;
    const std::size_t k = interval(s);
    const double h = knots_[k + 1].first - knots_[k].first;
    const double t = (s - knots_[k].first) / h;
    const double t2 = t * t;
    const double d00 = 6.0 * t2 - 6.0 * t;
    const double d10 = 3.0 * t2 - 4.0 * t + 1.0;
    const double d01 = -6.0 * t2 + 6.0 * t;
    const double d11 = 3.0 * t2 - 2.0 * t;
    return (d00 * knots_[k].second + d01 * knots_[k + 1].second) / h + d10 * slopes_[k] + d11 * slopes_[k + 1];
  }

  bool operator==(const SaturationCurve& o) const { return knots_ == o.knots_; }

 private:
  static double real_part(double x) { return x; }
  static double real_part(std::complex<double> x) { return x.real(); }

  std::size_t interval(double r) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), r, [](double v, const Knot& k) { return v < k.first; });
    return std::min<std::size_t>(static_cast<std::size_t>(it - knots_.begin()) - 1, knots_.size() - 2);
  }

  static double sign(double x) { return (x > 0.0) - (x < 0.0); }

  static std::vector<double> pchip_slopes(const std::vector<Knot>& kn) {
    const std::size_t n = kn.size();
    std::vector<double> h(n - 1), del(n - 1), d(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = kn[k + 1].first - kn[k].first;
      del[k] = (kn[k + 1].second - kn[k].second) / h[k];
    }
    if (n == 2) {
      d[0] = d[1] = del[0];
      return d;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (sign(del[k - 1]) * sign(del[k]) > 0.0) {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (sign(s) != sign(d0)) s = 0.0;
      else if (sign(d0) != sign(d1) && std::abs(s) > std::abs(3.0 * d0)) s = 3.0 * d0;
      return s;
    };
    d[0] = end_slope(h[0], h[1], del[0], del[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    return d;
  }

  std::vector<Knot> knots_;
  std::vector<double> slopes_;
};

}  // namespace gpeopt
