#include "cuspidal/msrel.hpp"

#include <cmath>

namespace cuspidal {

SpectralPoint ms_point(const Scenario& scn, double tau) {
  if (!(tau > 0.0) || !(tau < scn.tau1))
    throw InvariantViolation("ms_point: tau must lie in (0, tau1)");
  const double dk = scn.dk();
  if (dk > 0.0) {
    if (!(tau < dk * dk)) throw InvariantViolation("ms_point: tau above the reference threshold");
    return scn.point(cplx(dk + std::sqrt(dk * dk - tau), 0.0));
  }
  return scn.point(cplx(0.0, -std::sqrt(tau)));
}

double ms_lhs(const Scenario& scn, double tau, double r, const VectorXcd& phi) {
  const SpectralPoint pt = ms_point(scn, tau);
  ScatteringData sd = assemble(scn, pt);
  ModelField field = eigenform(scn, sd, phi);
  double total = 0.0;
  for (const auto& comp : field.cusp) total += segment_inner(comp, comp, 0.0, r).real();
  if (field.has_interior()) total += interior_sq_norm(field.interior);
  return total;
}

double ms_rhs(const Scenario& scn, double tau, double r, const VectorXcd& phi) {
  const SpectralPoint pt = ms_point(scn, tau);
  ScatteringData sd = assemble(scn, pt);
  const MatrixXcd dT = t_derivative_lambda(scn, pt);
  const VectorXcd tphi = sd.t_full * phi;
  const VectorXcd dphi = dT * phi;
  const double dk = scn.dk();
  const double phi2 = phi.squaredNorm();

  double rhs = 0.0;
  if (dk > 0.0) {
    const double a0 = std::sqrt(dk * dk - tau);
    const VectorXcd tref = tphi.segment(scn.in_offset, scn.in_mult);
    const VectorXcd dref = dphi.segment(scn.in_offset, scn.in_mult);
    const VectorXcd phin = phi;
    rhs += std::exp(2.0 * a0 * r) / (2.0 * a0) * phi2;
    rhs += 2.0 * r * inner(tref, phin).real();
    rhs += 2.0 * a0 * inner(dref, phin).real();
  } else {
    const double w = std::sqrt(tau);
    const VectorXcd tref = tphi.segment(scn.in_offset, scn.in_mult);
    const cplx a0val = inner(tref, phi);
    rhs += r * phi2;
    rhs += (1.0 / w) * (std::exp(cplx(0, 2.0 * w * r)) * a0val).imag();
  }

  // outgoing blocks: decaying sums (closed) and r-linear + derivative
  // bracket terms (open)
  int comp = 0;
  for (const auto& c : scn.model.channels) {
    const int m = c.mult;
    const VectorXcd tc = tphi.segment(comp, m);
    const VectorXcd dc = dphi.segment(comp, m);
    comp += m;
    const double t2 = tc.squaredNorm();
    if (c.theta > tau) {
      const double beta = std::sqrt(c.theta - tau);
      rhs -= std::exp(-2.0 * beta * r) / (2.0 * beta) * t2;
    } else {
      const double w = std::sqrt(tau - c.theta);
      rhs += r * t2;
      rhs += 2.0 * w * inner(dc, tc).imag();
    }
  }
  return rhs;
}

MsResult verify_ms(const Scenario& scn, double tau, double r, const VectorXcd& phi,
                   const PoleScanResult* scan) {
  const SpectralPoint pt = ms_point(scn, tau);
  if (scan) {
    for (double s0 : scan->candidates)
      if (std::abs(pt.s - s0) < scn.num.ms_pole_guard)
        throw NumericError("verify_ms: tau within the pole guard of a scan candidate");
  }
  MsResult res;
  res.tau = tau;
  res.r = r;
  res.lhs = ms_lhs(scn, tau, r, phi);
  res.rhs = ms_rhs(scn, tau, r, phi);
  res.rel_error = std::abs(res.lhs - res.rhs) / std::max(res.lhs, 1.0);
  res.truncation_bound = 0.0;
  return res;
}

cplx er_inner(const Scenario& scn, const SpectralPoint& pt1, const VectorXcd& phi,
              const SpectralPoint& pt2, const VectorXcd& psi, double r) {
  ScatteringData sd1 = assemble(scn, pt1);
  ScatteringData sd2 = assemble(scn, pt2);
  ModelField f1 = eigenform(scn, sd1, phi);
  ModelField f2 = eigenform(scn, sd2, psi);
  cplx total = 0.0;
  for (std::size_t i = 0; i < f1.cusp.size(); ++i)
    total += segment_inner(f1.cusp[i], f2.cusp[i], 0.0, r);
  if (f1.has_interior() && f2.has_interior()) total += interior_inner(f1.interior, f2.interior);
  return total;
}

}  // namespace cuspidal
