#include "cuspidal/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace cuspidal::kernels {

namespace {

void s_zaxpy(std::size_t n, cplx a, const cplx* x, cplx* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_zgemm_acc(std::size_t m, std::size_t n, const cplx* a, const cplx* b, cplx* c) {
  // c[:,j] += sum_k a[:,k] * b(k,j)
  for (std::size_t j = 0; j < n; ++j) {
    const cplx* bj = b + j * m;
    cplx* cj = c + j * m;
    for (std::size_t k = 0; k < m; ++k) {
      const cplx bkj = bj[k];
      const cplx* ak = a + k * m;
      for (std::size_t i = 0; i < m; ++i) cj[i] += ak[i] * bkj;
    }
  }
}

void s_zdiag_acc(std::size_t m, std::size_t n, const cplx* d, const cplx* x, cplx* y) {
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) y[j * m + i] += d[i] * x[j * m + i];
}

double s_sqnorm(std::size_t n, const cplx* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

cplx s_zdotc(std::size_t n, const cplx* x, const cplx* y) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * std::conj(y[i]);
  return s;
}

const Dispatch kScalar = {s_zaxpy, s_zgemm_acc, s_zdiag_acc, s_sqnorm, s_zdotc, "scalar"};

const Dispatch* pick() {
  if (const char* env = std::getenv("CUSPIDAL_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return &kScalar;
    if (std::strcmp(env, "avx2") == 0 && have_avx2()) return &avx2();
  }
  if (have_avx2()) return &avx2();
  return &kScalar;
}

}  // namespace

const Dispatch& scalar() { return kScalar; }

const Dispatch& active() {
  static const Dispatch* d = pick();
  return *d;
}

}  // namespace cuspidal::kernels
