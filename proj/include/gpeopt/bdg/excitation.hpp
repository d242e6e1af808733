#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gpeopt/bdg/bdg.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"

namespace gpeopt {

/// delta psi(t) = (u e^{-i omega t} + v* e^{i omega t}) e^{-i mu t}.
inline ComplexField evolve_excitation(const BdgMode& mode, double mu, double t) {
  require_same_grid(mode.u, mode.v, "evolve_excitation");
  ComplexField out(mode.u.grid);
  const cplx a = std::polar(1.0, -(mode.omega + mu) * t), b = std::polar(1.0, (mode.omega - mu) * t);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = mode.u.values[i] * a + std::conj(mode.v.values[i]) * b;
  return out;
}

/// |<psi_d, delta psi(t)>|^2 at each time.
inline std::vector<double> overlap_series(const ComplexField& psi_d, const BdgMode& mode, [[maybe_unused]] double mu, const std::vector<double>& times) {
  require_same_grid(psi_d, mode.u, "overlap_series");
  // <psi_d, delta psi(t)> = (<psi_d,u> e^{-i omega t} + <psi_d,v*> e^{i omega t}) e^{-i mu t}
  const cplx cu = inner_product(psi_d, mode.u);
  ComplexField vc = mode.v;
  for (auto& x : vc.values) x = std::conj(x);
  const cplx cv = inner_product(psi_d, vc);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(std::norm(cu * std::polar(1.0, -mode.omega * t) + cv * std::polar(1.0, mode.omega * t)));
  return out;
}

struct ExtractionResult {
  double theta = 0.0;    ///< arg <psi_d, psi(T)>
  double overlap = 0.0;  ///< |<psi_d, psi(T)>|
  bool assumption_violated = false;  ///< overlap below 0.5
  std::string warning;
  std::vector<ComplexField> delta;  ///< Delta psi at each snapshot time
};

/// Delta psi(t) = psi(t) - e^{i theta} psi_d e^{-i mu (t - T)} for a known theta.
inline ComplexField excitation_delta(const ComplexField& psi, double t, const ComplexField& psi_d, double mu, double T, double theta) {
  require_same_grid(psi, psi_d, "excitation_delta");
  const cplx ph = std::polar(1.0, theta - mu * (t - T));
  ComplexField d = psi;
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= ph * psi_d.values[i];
  return d;
}

/// Delta psi(t) = psi(t) - e^{i theta} psi_d e^{-i mu (t - T)} with theta the
/// phase minimizing ||psi(T) - e^{i theta} psi_d||. The first snapshot must be
/// taken at t = T.
inline ExtractionResult extract_excitation(const std::vector<ComplexField>& snapshots, const std::vector<double>& times,
                                           const ComplexField& psi_d, double mu, double T) {
  if (snapshots.empty() || snapshots.size() != times.size()) throw ShapeError("extract_excitation: need one time per snapshot");
  if (std::abs(times.front() - T) > 1e-12 * std::max(1.0, std::abs(T))) throw ShapeError("extract_excitation: first snapshot must be at t = T");
  ExtractionResult r;
  const cplx ov = inner_product(psi_d, snapshots.front());
  r.theta = std::arg(ov);
  r.overlap = std::abs(ov);
  if (r.overlap < 0.5) {
    r.assumption_violated = true;
    r.warning = "extract_excitation: |<psi_d, psi(T)>| = " + std::to_string(r.overlap) + " < 0.5; psi(T) is far from the target";
  }
  r.delta.reserve(snapshots.size());
  for (std::size_t k = 0; k < snapshots.size(); ++k) r.delta.push_back(excitation_delta(snapshots[k], times[k], psi_d, mu, T, r.theta));
  return r;
}

}  // namespace gpeopt
