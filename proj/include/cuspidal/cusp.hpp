#pragma once

// Exact solutions on the cusp half-line [0, inf): free channel exponentials,
// Dirichlet SIN combinations, the closed-form channel resolvent kernel, and
// closed-form L2 integrals of exponential sums.
//
// All fields are stored in the gauged frame, where the channel operator is
// -d^2/du^2 + theta and L2 norms are plain integrals; un-gauged values carry
// the extra factor e^{a u}.

#include <vector>

#include "cuspidal/branchcut.hpp"

namespace cuspidal {

struct ExpTerm {
  cplx coef;
  cplx rate;  // gauged exponent
};

// A finite exponential sum on one channel, valid from u = 0.
struct ChannelField {
  std::vector<ExpTerm> terms;

  cplx eval(double u) const {
    cplx v = 0.0;
    for (const auto& t : terms) v += t.coef * std::exp(t.rate * u);
    return v;
  }
  cplx eval_derivative(double u) const {
    cplx v = 0.0;
    for (const auto& t : terms) v += t.coef * t.rate * std::exp(t.rate * u);
    return v;
  }
  bool square_integrable() const {
    for (const auto& t : terms)
      if (t.coef != cplx(0.0) && t.rate.real() >= 0.0) return false;
    return true;
  }
};

// One ChannelField per channel-component (channels expanded by multiplicity).
struct CuspField {
  std::vector<ChannelField> components;
};

// Free solution e^{+/- i sqrt(lambda - theta) u} in the gauged frame
// (value 1 at u = 0).  The minus sign is the incoming-type exponential,
// equal to e^{(s - d_k) u} on the reference block.
ChannelField free_solution(const Channel& c, const SpectralPoint& pt, int sign);

// (1/2i)(e_+ - e_-): value 0, gauged derivative sqrt_plus(lambda - theta)
// at u = 0.
ChannelField sin_solution(const Channel& c, cplx lambda);

// Closed-form Dirichlet resolvent kernel of the channel operator, in the
// un-gauged frame:
//   K(lambda, u, r) = (i/2) e^{a(u+r)} (e^{i w |u-r|} - e^{i w (u+r)}) / w,
//   w = sqrt_plus(lambda - theta).
// Rejects lambda on the channel's continuous-spectrum ray [theta, inf).
cplx resolvent_kernel(const Channel& c, cplx lambda, double u, double r);

// Gauged variant (no e^{a(u+r)} prefactor); Green's function of
// -d^2/du^2 + theta - lambda with a Dirichlet condition at 0.
cplx resolvent_kernel_gauged(const Channel& c, cplx lambda, double u, double r);

// Quadrature application of the gauged kernel to samples of f on a uniform
// grid over [0, U].  Requires step < pi / (4 |w|).
std::vector<cplx> apply_resolvent(const Channel& c, cplx lambda,
                                  const std::vector<cplx>& f_samples, double step);

// Exact integral of |field|^2 over [from, inf).  Throws NumericError when a
// rate pair has nonnegative real-part sum.
double l2_norm_tail(const ChannelField& field, double from);

// Exact integral of field1 * conj(field2) over [u0, u1] (finite segment;
// handles vanishing exponent sums by the linear limit).
cplx segment_inner(const ChannelField& f1, const ChannelField& f2, double u0, double u1);

}  // namespace cuspidal
