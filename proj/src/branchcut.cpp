#include "cuspidal/branchcut.hpp"

#include <cmath>

namespace cuspidal {

namespace {
constexpr double kThetaTol = 1e-12;
}

cplx sqrt_plus(cplx z) {
  if (z.imag() == 0.0) {
    if (z.real() > 0.0) return {std::sqrt(z.real()), 0.0};  // boundary value from above
    if (z.real() == 0.0) return {0.0, 0.0};
    return {0.0, std::sqrt(-z.real())};
  }
  // i * principal sqrt of -z has positive imaginary part off R+.
  return cplx(0.0, 1.0) * std::sqrt(-z);
}

cplx s_of_lambda(cplx lambda, double dk) {
  return dk - cplx(0.0, 1.0) * sqrt_plus(lambda - dk * dk);
}

bool in_reference_block(const SpectralPoint& pt, const Channel& c) {
  return c.nu == 0.0 && std::abs(c.theta - pt.dk * pt.dk) <= kThetaTol;
}

cplx channel_rate(const SpectralPoint& pt, const Channel& c, Direction dir) {
  const bool ref = in_reference_block(pt, c);
  if (dir == Direction::incoming) {
    if (!ref)
      throw InvariantViolation("channel_rate: incoming direction outside the reference block");
    return pt.s - pt.dk;
  }
  if (ref) return pt.dk - pt.s;
  const cplx lambda = pt.lambda();
  if (c.theta <= kThetaTol) {
    // zero-threshold root on the recorded sheet
    const cplx w = sqrt_plus(lambda);
    return (pt.zero_sheet == Sheet::physical ? cplx(0, 1) : cplx(0, -1)) * w;
  }
  return cplx(0, 1) * sqrt_plus(lambda - c.theta);
}

SpectralPoint deck_flip(const SpectralPoint& pt, double tau1) {
  if (!(std::abs(pt.lambda()) < tau1))
    throw InvariantViolation("deck_flip: point outside |lambda| < tau1");
  SpectralPoint out = pt;
  out.s = 2.0 * pt.dk - pt.s;
  return out;
}

SpectralPoint conjugate_point(const SpectralPoint& pt) {
  SpectralPoint out = pt;
  out.s = std::conj(pt.s);
  const cplx lambda = pt.lambda();
  if (lambda.imag() == 0.0 && lambda.real() > 0.0)
    out.zero_sheet = (pt.zero_sheet == Sheet::physical) ? Sheet::continued : Sheet::physical;
  return out;
}

}  // namespace cuspidal
