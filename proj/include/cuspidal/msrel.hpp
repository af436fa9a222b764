#pragma once

// Numerical verification of the Maass-Selberg relations: quadrature of the
// truncated eigenform norm against its closed-form boundary-data expression.

#include "cuspidal/residues.hpp"

namespace cuspidal {

// Physical boundary point for real spectral parameter tau in (0, tau1):
// s = d_k + sqrt(d_k^2 - tau) for d_k > 0, s = -i sqrt(tau) in the middle.
SpectralPoint ms_point(const Scenario& scn, double tau);

// ||E^r(tau, phi)||^2 by cavity quadrature plus exact exponential-sum
// integrals of the cusp field on [0, r].
double ms_lhs(const Scenario& scn, double tau, double r, const VectorXcd& phi);

// Closed-form right-hand side from the scattering data at tau:
//   * the incoming-square term (e^{2 a0 r}/(2 a0) ||phi||^2, or r ||phi||^2
//     in the middle case with the oscillatory cross term),
//   * the incoming-block bracket and lambda-derivative terms,
//   * r-linear and derivative terms of every open outgoing block,
//   * decaying sums over every closed outgoing block.
double ms_rhs(const Scenario& scn, double tau, double r, const VectorXcd& phi);

struct MsResult {
  double tau = 0.0;
  double r = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_error = 0.0;
  double truncation_bound = 0.0;
};

// |lhs - rhs| / max(lhs, 1).  When `scan` is given, refuses tau whose
// boundary point lies within the pole guard of a scan candidate.
MsResult verify_ms(const Scenario& scn, double tau, double r, const VectorXcd& phi,
                   const PoleScanResult* scan = nullptr);

// <E^r(pt1, phi), E^r(pt2, psi)> over [-L, r]: cavity quadrature plus exact
// segment integrals (diagnostic helper for the two-parameter identity).
cplx er_inner(const Scenario& scn, const SpectralPoint& pt1, const VectorXcd& phi,
              const SpectralPoint& pt2, const VectorXcd& psi, double r);

}  // namespace cuspidal
