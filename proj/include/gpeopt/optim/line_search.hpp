#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "gpeopt/core/control.hpp"
#include "gpeopt/core/error.hpp"

namespace gpeopt {

struct LineSearchConfig {
  double first_max_step = 0.1;  ///< first iteration: trial alpha with max|alpha d| equal to this
  double delta = 0.1;           ///< sufficient decrease
  double sigma = 0.9;           ///< curvature (checked by the optimizer once the gradient is known)
  int max_evaluations = 12;
  int max_expansions = 6;
  double expansion = 4.0;

  void validate() const {
    if (!(0.0 < delta && delta < sigma && sigma < 1.0)) throw ConfigError("line search: need 0 < delta < sigma < 1");
    if (max_evaluations < 1 || max_expansions < 0) throw ConfigError("line search: evaluation budget must be positive");
    if (!(first_max_step > 0.0)) throw ConfigError("line search: first_max_step must be positive");
    if (!(expansion > 1.0)) throw ConfigError("line search: expansion factor must exceed 1");
  }

  bool operator==(const LineSearchConfig&) const = default;
};

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
  int evaluations = 0;
  bool success = false;
};

/// Step along a descent direction for phi(alpha) = J(lambda + alpha d), given
/// phi(0) and phi'(0) < 0. Each trial fits the parabola through phi(0),
/// phi'(0) and the trial value, then expands, backtracks or jumps to the
/// parabola's minimizer once. Returns the best trial satisfying sufficient
/// decrease; on an exact quadratic the second trial is the minimizer.
inline LineSearchResult line_search(const std::function<double(double)>& phi, double phi0, double dphi0, double alpha0,
                                    const LineSearchConfig& cfg = {}) {
  cfg.validate();
  if (!(dphi0 < 0.0)) throw NumericalError("line search: direction is not a descent direction");
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw NumericalError("line search: initial step must be positive");
  LineSearchResult best;
  best.value = phi0;
  double a = alpha0;
  int expansions = 0;
  bool refined = false;
  for (int e = 0; e < cfg.max_evaluations; ++e) {
    const double f = phi(a);
    ++best.evaluations;
    const bool armijo = std::isfinite(f) && f <= phi0 + cfg.delta * a * dphi0;
    if (armijo && f < best.value) {
      best.alpha = a;
      best.value = f;
      best.success = true;
    }
    if (!std::isfinite(f)) {
      a *= 0.1;
      continue;
    }
    const double c = (f - phi0 - dphi0 * a) / (a * a);
    const double aq = c > 0.0 ? -dphi0 / (2.0 * c) : std::numeric_limits<double>::infinity();
    if (!armijo) {
      // An earlier trial already decreases enough; overshooting it again is wasted work.
      if (best.success) break;
      a = std::clamp(aq, 0.1 * a, 0.5 * a);
      continue;
    }
    if (aq > cfg.expansion * a) {
      if (expansions++ >= cfg.max_expansions) break;
      a *= cfg.expansion;
      continue;
    }
    // One jump to the parabola's minimizer; further refits rarely pay off.
    if (refined || std::abs(aq - a) <= 1e-2 * a) break;
    refined = true;
    a = aq;
  }
  return best;
}

}  // namespace gpeopt
