#pragma once

// Branch-aware square roots and the s <-> lambda reparametrization on the
// two-sheeted spectral surface near lambda = 0.
//
// Conventions used throughout:
//  * sqrt_plus(z) is the square root with Im > 0 off the nonnegative real
//    axis; on the open positive real axis it takes the boundary value
//    +sqrt(z) (limit from the upper half plane).
//  * lambda = s * (2 d_k - s) with d_k = |f/2 - k| for the reference
//    fiber degree k.  Re s > d_k is the physical half.
//  * A SpectralPoint additionally records the sheet of the zero-threshold
//    root (middle-degree channels) whenever the reference threshold is
//    nonzero; the reference root itself is encoded in s.

#include <complex>

#include "cuspidal/bundle.hpp"

namespace cuspidal {

using cplx = std::complex<double>;

cplx sqrt_plus(cplx z);

inline cplx lambda_of_s(cplx s, double dk) { return s * (2.0 * dk - s); }

// d_k - i*sqrt_plus(lambda - d_k^2); inverse of lambda_of_s on Re s >= d_k.
cplx s_of_lambda(cplx lambda, double dk);

enum class Sheet { physical, continued };

struct SpectralPoint {
  cplx s;
  int k = 0;          // reference fiber degree
  double dk = 0.0;    // |f/2 - k|
  Sheet zero_sheet = Sheet::physical;  // sheet of the sqrt(lambda) root

  cplx lambda() const { return lambda_of_s(s, dk); }

  static SpectralPoint make(cplx s, int k, int f, Sheet zero = Sheet::physical) {
    SpectralPoint pt;
    pt.s = s;
    pt.k = k;
    pt.dk = std::abs(0.5 * f - k);
    pt.zero_sheet = zero;
    return pt;
  }
  // Middle-degree point parametrized by lambda directly (s = -i sqrt(lambda)).
  static SpectralPoint middle_from_lambda(cplx lambda, int k, int f) {
    return make(-cplx(0, 1) * sqrt_plus(lambda), k, f);
  }
  // Analytic-germ rule for contours around real interior points: the
  // zero-threshold root follows the principal branch of sqrt(lambda),
  // i.e. physical for Im lambda >= 0, continued below.
  static SpectralPoint germ(cplx s, int k, int f) {
    SpectralPoint pt = make(s, k, f);
    if (pt.lambda().imag() < 0.0) pt.zero_sheet = Sheet::continued;
    return pt;
  }

  SpectralPoint with_zero_sheet(Sheet sh) const {
    SpectralPoint pt = *this;
    pt.zero_sheet = sh;
    return pt;
  }
};

enum class Direction { incoming, outgoing };

// Gauged exponential rate of a channel at a spectral point.
//  incoming (reference-threshold channels only):  s - d_k
//  outgoing, reference threshold:                 d_k - s
//  outgoing, zero threshold (middle channels):    +/- i sqrt_plus(lambda)
//  outgoing, other thresholds:                    i sqrt_plus(lambda - theta)
cplx channel_rate(const SpectralPoint& pt, const Channel& c, Direction dir);

bool in_reference_block(const SpectralPoint& pt, const Channel& c);

// Deck transform around the reference branch point: s -> 2 d_k - s, all
// other sheets unchanged.  Only valid for |lambda| < tau1.
SpectralPoint deck_flip(const SpectralPoint& pt, double tau1);

// The surface point at which every channel root is the negated conjugate
// of its value at pt; pairs with pt in the self-adjointness relation
// T(conj pt)^* = T(pt).  Flips the zero sheet exactly when lambda lies on
// the open positive real axis.
SpectralPoint conjugate_point(const SpectralPoint& pt);

}  // namespace cuspidal
