#include <doctest.h>

#include "helpers.hpp"

using namespace cuspidal;
using namespace testutil;

namespace {
BundleData cusp_bundle() { return kunneth_table({1}, {1, 1}); }
}  // namespace

TEST_CASE("free_solution rates") {
  BundleData bun = cusp_bundle();
  const Channel ref = bun.make_channel(0, 0, 0.0, 1, false);  // k = 0 < f/2, a = d = 1/2
  auto pt = SpectralPoint::make(cplx(0.8, 0), 0, 1);
  auto minus = free_solution(ref, pt, -1);
  CHECK(std::abs(minus.terms[0].rate - cplx(0.3, 0)) < 1e-14);  // s - d
  auto pt2 = SpectralPoint::make(cplx(1.0, 0), 0, 1);           // s = 2 d_k
  auto plus = free_solution(ref, pt2, +1);
  CHECK(std::abs(plus.terms[0].rate - cplx(-0.5, 0)) < 1e-14);  // -d_k
  CHECK(std::abs(plus.eval(0.0) - 1.0) < 1e-15);

  // closed channel on the physical sheet decays
  const Channel closed = bun.make_channel(0, 0, 2.0, 1, false);
  auto ptc = SpectralPoint::make(cplx(0.7, 0.1), 0, 1);
  auto out = free_solution(closed, ptc, +1);
  CHECK(out.terms[0].rate.real() < 0.0);
  CHECK(out.square_integrable());
}

TEST_CASE("sin_solution") {
  BundleData bun = cusp_bundle();
  const Channel c = bun.make_channel(0, 0, 0.0, 1, false);
  const double theta = c.theta;
  for (cplx lam : {cplx(0.1, 0.2), cplx(-0.4, 0.0), cplx(theta + 1.0, 0.0)}) {
    auto f = sin_solution(c, lam);
    CHECK(std::abs(f.eval(0.0)) < 1e-15);
    CHECK(std::abs(f.eval_derivative(0.0) - sqrt_plus(lam - theta)) < 1e-14);
  }
  auto f = sin_solution(c, cplx(theta + 1.0, 0.0));
  for (double u : {0.3, 1.1, 2.7}) CHECK(std::abs(f.eval(u) - std::sin(u)) < 1e-13);
  // below the threshold the field is sinh-type: real up to the phase i
  auto g = sin_solution(c, cplx(theta - 1.0, 0.0));
  for (double u : {0.5, 1.5}) {
    const cplx v = g.eval(u) / cplx(0, 1);
    CHECK(std::abs(v.imag()) < 1e-13);
    CHECK(std::abs(v.real() - std::sinh(u)) < 1e-12);
  }
}

TEST_CASE("resolvent kernel: Dirichlet, symmetry, spectrum guard") {
  BundleData bun = cusp_bundle();
  const Channel c = bun.make_channel(0, 0, 0.0, 1, false);
  const cplx lam(0.05, 0.3);
  for (double r : {0.2, 1.0, 3.7}) CHECK(std::abs(resolvent_kernel(c, lam, 0.0, r)) < 1e-15);
  for (int i = 0; i < 25; ++i) {
    const double u = 3.0 * std::abs(random_cplx().real());
    const double r = 3.0 * std::abs(random_cplx().real());
    CHECK(std::abs(resolvent_kernel(c, lam, u, r) - resolvent_kernel(c, lam, r, u)) < 1e-14);
  }
  CHECK_THROWS_AS(resolvent_kernel(c, cplx(c.theta + 0.5, 0.0), 1.0, 1.0), InvariantViolation);
  // un-gauged kernel carries e^{a(u+r)}
  CHECK(std::abs(resolvent_kernel(c, lam, 1.0, 2.0) -
                 std::exp(c.a * 3.0) * resolvent_kernel_gauged(c, lam, 1.0, 2.0)) < 1e-14);
}

TEST_CASE("kernel derivative jump across the diagonal is -1") {
  BundleData bun = cusp_bundle();
  const Channel c = bun.make_channel(0, 0, 0.0, 1, false);
  const cplx lam(0.1, 0.25);
  const double r = 1.3;
  const double h = 1e-6;
  auto dK = [&](double u) {
    return (resolvent_kernel_gauged(c, lam, u + h, r) -
            resolvent_kernel_gauged(c, lam, u - h, r)) /
           (2.0 * h);
  };
  const cplx jump = dK(r + 2.0 * h) - dK(r - 2.0 * h);
  CHECK(std::abs(jump + 1.0) < 1e-4);
}

TEST_CASE("apply_resolvent: finite-difference oracle at order 2") {
  BundleData bun = cusp_bundle();
  const Channel c = bun.make_channel(0, 0, 0.0, 1, false);
  const cplx lam(-0.3, 0.0);
  const double U = 6.0;
  auto bump = [&](double u) {
    const double x = (u - 3.0) / 1.2;
    return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
  };
  std::vector<double> errs;
  std::vector<double> steps = {U / 200, U / 400, U / 800};
  for (double step : steps) {
    const std::size_t n = static_cast<std::size_t>(std::lround(U / step)) + 1;
    std::vector<cplx> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = bump(static_cast<double>(i) * step);
    auto g = apply_resolvent(c, lam, f, step);
    // g must be real for real lambda below the threshold
    double imax = 0.0, err = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      imax = std::max(imax, std::abs(g[i].imag()));
      const cplx ddg = -(g[i + 1] - 2.0 * g[i] + g[i - 1]) / (step * step);
      err = std::max(err, std::abs(ddg + (c.theta - lam) * g[i] - f[i]));
    }
    CHECK(imax < 1e-12);
    errs.push_back(err);
  }
  const double order1 = std::log2(errs[0] / errs[1]);
  const double order2 = std::log2(errs[1] / errs[2]);
  CHECK(order1 > 1.8);
  CHECK(order1 < 2.2);
  CHECK(order2 > 1.8);
  CHECK(order2 < 2.2);

  // zero input stays zero, oscillation guard triggers
  std::vector<cplx> zero(101, cplx(0.0));
  auto gz = apply_resolvent(c, lam, zero, 0.06);
  for (const auto& v : gz) CHECK(std::abs(v) < 1e-15);
  CHECK_THROWS_AS(apply_resolvent(c, cplx(400.0, 1.0), zero, 0.06), NumericError);
}

TEST_CASE("free solution Wronskian") {
  BundleData bun = cusp_bundle();
  const Channel c = bun.make_channel(0, 0, 0.7, 1, false);
  auto pt = SpectralPoint::make(cplx(0.8, 0.2), 0, 1);
  auto ep = free_solution(c, pt, +1);
  auto em = free_solution(c, pt, -1);
  const cplx lam = pt.lambda();
  const cplx want = 2.0 * cplx(0, 1) * sqrt_plus(lam - c.theta);
  for (double u : {0.0, 0.8, 2.2}) {
    const cplx w = ep.eval(u) * em.eval_derivative(u) - ep.eval_derivative(u) * em.eval(u);
    CHECK(std::abs(w + want) < 1e-12);  // W(e+, e-) = -(e+' e- - ...) sign convention
  }
}

TEST_CASE("l2_norm_tail") {
  ChannelField f;
  f.terms.push_back({cplx(1.0), cplx(-1.0, 0.0)});
  CHECK(l2_norm_tail(f, 0.0) == doctest::Approx(0.5).epsilon(1e-12));

  ChannelField g;
  g.terms.push_back({cplx(1.0), cplx(0.1, 0.0)});
  CHECK_THROWS_AS(l2_norm_tail(g, 0.0), NumericError);

  ChannelField h;
  h.terms.push_back({cplx(0.7, 0.4), cplx(-0.6, 1.3)});
  h.terms.push_back({cplx(-0.2, 0.9), cplx(-1.1, -0.4)});
  const double from = 0.3;
  // quadrature oracle on [from, from + 40]
  const int n = 200000;
  const double step = 40.0 / n;
  double quad = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = from + i * step;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    quad += w * std::norm(h.eval(u)) * step;
  }
  CHECK(std::abs(l2_norm_tail(h, from) - quad) < 1e-10);
}

TEST_CASE("segment_inner closed form vs quadrature") {
  ChannelField f;
  f.terms.push_back({cplx(1.0, -0.3), cplx(0, 0.9)});
  f.terms.push_back({cplx(0.4, 0.2), cplx(-0.5, 0.1)});
  ChannelField g;
  g.terms.push_back({cplx(-0.8, 0.1), cplx(0, 0.9)});
  const double a = 0.2, b = 4.1;
  const int n = 200000;
  cplx quad = 0.0;
  const double step = (b - a) / n;
  for (int i = 0; i <= n; ++i) {
    const double u = a + i * step;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    quad += w * f.eval(u) * std::conj(g.eval(u)) * step;
  }
  CHECK(std::abs(segment_inner(f, g, a, b) - quad) < 1e-9);
}
