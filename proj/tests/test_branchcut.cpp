#include <doctest.h>

#include "helpers.hpp"

using namespace cuspidal;
using namespace testutil;

TEST_CASE("sqrt_plus branch values") {
  CHECK(std::abs(sqrt_plus(cplx(-1, 0)) - cplx(0, 1)) < 1e-15);
  CHECK(std::abs(sqrt_plus(cplx(4, 0)) - cplx(2, 0)) < 1e-15);  // boundary from above
  CHECK(std::abs(sqrt_plus(cplx(0, 2)) - cplx(1, 1)) < 1e-15);
  CHECK(sqrt_plus(cplx(0, 0)) == cplx(0, 0));
}

TEST_CASE("sqrt_plus square and sign properties") {
  for (int i = 0; i < 200; ++i) {
    cplx z = random_cplx(5.0);
    if (z.imag() == 0.0) z += cplx(0, 1e-3);
    const cplx w = sqrt_plus(z);
    CHECK(std::abs(w * w - z) < 1e-12 * (1.0 + std::abs(z)));
    CHECK(w.imag() > 0.0);
  }
}

TEST_CASE("lambda_of_s examples") {
  CHECK(std::abs(lambda_of_s(cplx(1.0, 0), 0.5)) < 1e-15);            // s = 2 d_k
  CHECK(std::abs(lambda_of_s(cplx(0.5, 0), 0.5) - 0.25) < 1e-15);     // branch point
  CHECK(std::abs(lambda_of_s(cplx(0.6, 0), 0.5) - 0.24) < 1e-15);     // 0.6 * 0.4
}

TEST_CASE("s_of_lambda examples and round trip") {
  CHECK(std::abs(s_of_lambda(cplx(0, 0), 0.5) - 1.0) < 1e-15);
  CHECK(std::abs(s_of_lambda(cplx(0.25, 0), 0.5) - 0.5) < 1e-15);
  const double tau = 0.37;
  CHECK(std::abs(s_of_lambda(cplx(tau, 0), 0.0) - cplx(0, -std::sqrt(tau))) < 1e-15);
  for (int i = 0; i < 200; ++i) {
    const double dk = 0.5 + 0.5 * std::abs(random_cplx().real());
    cplx s = cplx(dk, 0) + cplx(std::abs(random_cplx().real()), random_cplx().imag());
    const cplx lam = lambda_of_s(s, dk);
    const cplx s2 = s_of_lambda(lam, dk);
    CHECK(std::abs(s2 - s) < 1e-12 * (1.0 + std::abs(s)));
    CHECK(std::abs(lambda_of_s(s2, dk) - lam) < 1e-12 * (1.0 + std::abs(lam)));
  }
}

TEST_CASE("deck flip: involution and lambda invariance") {
  auto pt = SpectralPoint::make(cplx(0.6, 0.02), 0, 1);  // d_k = 1/2
  const double tau1 = 0.25;
  auto flipped = deck_flip(pt, tau1);
  CHECK(std::abs(flipped.s - cplx(0.4, -0.02)) < 1e-15);
  CHECK(std::abs(flipped.lambda() - pt.lambda()) < 1e-15);
  auto back = deck_flip(flipped, tau1);
  CHECK(std::abs(back.s - pt.s) < 1e-15);

  auto pt2 = SpectralPoint::make(cplx(1.0, 0), 0, 1);  // s = 2 d_k -> 0
  CHECK(std::abs(deck_flip(pt2, tau1).s) < 1e-15);

  auto outside = SpectralPoint::make(cplx(0.5, 0.9), 0, 1);
  CHECK_THROWS_AS(deck_flip(outside, tau1), InvariantViolation);
}

TEST_CASE("channel rates") {
  BundleData bun = kunneth_table({1}, {1, 1});  // B = pt, F = S^1
  const Channel ref = bun.make_channel(0, 0, 0.0, 1, false);  // d = 1/2
  auto pt = SpectralPoint::make(cplx(0.8, 0), 0, 1);
  CHECK(std::abs(channel_rate(pt, ref, Direction::incoming) - cplx(0.3, 0)) < 1e-15);
  CHECK(std::abs(channel_rate(pt, ref, Direction::outgoing) - cplx(-0.3, 0)) < 1e-15);

  const Channel closed = bun.make_channel(0, 0, 0.9, 1, false);  // theta = 1.15
  const cplx lam = pt.lambda();
  const cplx rate = channel_rate(pt, closed, Direction::outgoing);
  CHECK(std::abs(rate - cplx(-std::sqrt(1.15 - lam.real()), 0)) < 1e-12);
  CHECK_THROWS_AS(channel_rate(pt, closed, Direction::incoming), InvariantViolation);
}

TEST_CASE("channel rate continuity across the boundary ray") {
  // middle channel (theta = 0) seen from a reference with d_k = 1: the
  // germ-rule rate must be continuous along a path whose lambda crosses
  // the open ray
  BundleData bun = kunneth_table({1, 1}, {1, 2, 1});
  const Channel mid = bun.make_channel(0, 1, 0.0, 1, false);
  const double dk = 1.0;
  const cplx s0(1.9, 0.0);  // lambda = 0.19 on the open ray
  cplx prev;
  const int n = 400;
  double max_step = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = -0.05 + 0.1 * i / n;
    auto pt = SpectralPoint::germ(s0 + cplx(0, t), 0, 2);
    (void)dk;
    const cplx rate = channel_rate(pt, mid, Direction::outgoing);
    if (i > 0) max_step = std::max(max_step, std::abs(rate - prev));
    prev = rate;
  }
  CHECK(max_step < 0.01);  // < C * step for a smooth germ
}

TEST_CASE("conjugate point flips the open-channel sheet at real lambda") {
  auto pt = SpectralPoint::make(cplx(1.9, 0), 0, 2);  // d_k = 1, lambda real > 0
  auto pc = conjugate_point(pt);
  CHECK(pc.zero_sheet == Sheet::continued);
  auto off = SpectralPoint::make(cplx(1.9, 0.1), 0, 2);
  CHECK(conjugate_point(off).zero_sheet == Sheet::physical);
  CHECK(std::abs(conjugate_point(off).s - std::conj(off.s)) < 1e-15);
}
