#include <doctest.h>

#include <cuspidal/kernels.hpp>

#include <random>
#include <vector>

using namespace cuspidal;
using kernels::cplx;

namespace {

std::vector<cplx> random_vec(std::size_t n, std::mt19937& gen) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& z : v) z = {d(gen), d(gen)};
  return v;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("scalar and simd kernel variants agree") {
  if (!kernels::have_avx2()) return;
  std::mt19937 gen(7u);
  const auto& sc = kernels::scalar();
  const auto& vx = kernels::avx2();
  for (std::size_t n : {1u, 2u, 3u, 7u, 16u, 33u}) {
    auto x = random_vec(n, gen);
    auto y1 = random_vec(n, gen);
    auto y2 = y1;
    const cplx alpha{0.3, -0.7};
    sc.zaxpy(n, alpha, x.data(), y1.data());
    vx.zaxpy(n, alpha, x.data(), y2.data());
    CHECK(max_diff(y1, y2) < 1e-14);

    CHECK(std::abs(sc.sqnorm(n, x.data()) - vx.sqnorm(n, x.data())) < 1e-13);
    CHECK(std::abs(sc.zdotc(n, x.data(), y1.data()) - vx.zdotc(n, x.data(), y1.data())) < 1e-13);

    auto d = random_vec(n, gen);
    auto m1 = random_vec(n * 4, gen);
    auto o1 = random_vec(n * 4, gen);
    auto o2 = o1;
    sc.zdiag_acc(n, 4, d.data(), m1.data(), o1.data());
    vx.zdiag_acc(n, 4, d.data(), m1.data(), o2.data());
    CHECK(max_diff(o1, o2) < 1e-13);
  }
  for (std::size_t m : {1u, 2u, 5u, 8u}) {
    auto a = random_vec(m * m, gen);
    auto b = random_vec(m * 3, gen);
    auto c1 = random_vec(m * 3, gen);
    auto c2 = c1;
    sc.zgemm_acc(m, 3, a.data(), b.data(), c1.data());
    vx.zgemm_acc(m, 3, a.data(), b.data(), c2.data());
    CHECK(max_diff(c1, c2) < 1e-13);
  }
}

TEST_CASE("zgemm_acc matches a hand product") {
  std::mt19937 gen(11u);
  const std::size_t m = 4, n = 2;
  auto a = random_vec(m * m, gen);
  auto b = random_vec(m * n, gen);
  std::vector<cplx> c(m * n, cplx(0.0));
  kernels::zgemm_acc(m, n, a.data(), b.data(), c.data());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      cplx want = 0.0;
      for (std::size_t k = 0; k < m; ++k) want += a[k * m + i] * b[j * m + k];
      CHECK(std::abs(c[j * m + i] - want) < 1e-14);
    }
}

TEST_CASE("dispatch reports an implementation") {
  const auto& act = kernels::active();
  CHECK((std::string(act.name) == "scalar" || std::string(act.name) == "avx2"));
}
