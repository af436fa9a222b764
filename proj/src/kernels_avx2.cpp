#include "cuspidal/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define CUSPIDAL_X86 1
#include <immintrin.h>
#else
#define CUSPIDAL_X86 0
#endif

namespace cuspidal::kernels {

#if CUSPIDAL_X86

namespace {

// One __m256d holds two interleaved complex doubles [re0, im0, re1, im1].
// Complex product with a broadcast scalar (br, bi):
//   re = ar*br - ai*bi,  im = ar*bi + ai*br
// computed as fmaddsub(a, [br br br br], swap(a)*[bi bi bi bi]).

__attribute__((target("avx2,fma")))
inline __m256d cmul_bcast(__m256d a, __m256d br, __m256d bi) {
  __m256d aswap = _mm256_permute_pd(a, 0x5);         // [im0, re0, im1, re1]
  return _mm256_fmaddsub_pd(a, br, _mm256_mul_pd(aswap, bi));
}

__attribute__((target("avx2,fma")))
void v_zaxpy(std::size_t n, cplx alpha, const cplx* x, cplx* y) {
  const double* xd = reinterpret_cast<const double*>(x);
  double* yd = reinterpret_cast<double*>(y);
  const __m256d br = _mm256_set1_pd(alpha.real());
  const __m256d bi = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(yv, cmul_bcast(xv, br, bi)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2,fma")))
void v_zgemm_acc(std::size_t m, std::size_t n, const cplx* a, const cplx* b, cplx* c) {
  for (std::size_t j = 0; j < n; ++j) {
    const cplx* bj = b + j * m;
    cplx* cj = c + j * m;
    for (std::size_t k = 0; k < m; ++k) {
      v_zaxpy(m, bj[k], a + k * m, cj);
    }
  }
}

__attribute__((target("avx2,fma")))
void v_zdiag_acc(std::size_t m, std::size_t n, const cplx* d, const cplx* x, cplx* y) {
  const double* dd = reinterpret_cast<const double*>(d);
  for (std::size_t j = 0; j < n; ++j) {
    const double* xd = reinterpret_cast<const double*>(x + j * m);
    double* yd = reinterpret_cast<double*>(y + j * m);
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
      __m256d dv = _mm256_loadu_pd(dd + 2 * i);
      __m256d xv = _mm256_loadu_pd(xd + 2 * i);
      __m256d yv = _mm256_loadu_pd(yd + 2 * i);
      __m256d dre = _mm256_movedup_pd(dv);           // [dr0, dr0, dr1, dr1]
      __m256d dim = _mm256_permute_pd(dv, 0xF);      // [di0, di0, di1, di1]
      _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(yv, cmul_bcast(xv, dre, dim)));
    }
    for (; i < m; ++i) y[j * m + i] += d[i] * x[j * m + i];
  }
}

__attribute__((target("avx2,fma")))
double v_sqnorm(std::size_t n, const cplx* x) {
  const double* xd = reinterpret_cast<const double*>(x);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    acc = _mm256_fmadd_pd(xv, xv, acc);
  }
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, acc);
  double s = tmp[0] + tmp[1] + tmp[2] + tmp[3];
  for (; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

__attribute__((target("avx2,fma")))
cplx v_zdotc(std::size_t n, const cplx* x, const cplx* y) {
  // x * conj(y): re = xr*yr + xi*yi, im = xi*yr - xr*yi
  const double* xd = reinterpret_cast<const double*>(x);
  const double* yd = reinterpret_cast<const double*>(y);
  __m256d accr = _mm256_setzero_pd();
  __m256d acci = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    accr = _mm256_fmadd_pd(xv, yv, accr);
    __m256d xswap = _mm256_permute_pd(xv, 0x5);      // [xi, xr, ...]
    acci = _mm256_fmadd_pd(xswap, yv, acci);
  }
  alignas(32) double tr[4], ti[4];
  _mm256_store_pd(tr, accr);
  _mm256_store_pd(ti, acci);
  // accr lanes: [xr*yr, xi*yi, ...] -> re adds both; acci: [xi*yr, xr*yi, ...] -> im = even - odd
  double re = tr[0] + tr[1] + tr[2] + tr[3];
  double im = ti[0] - ti[1] + ti[2] - ti[3];
  cplx s(re, im);
  for (; i < n; ++i) s += x[i] * std::conj(y[i]);
  return s;
}

const Dispatch kAvx2 = {v_zaxpy, v_zgemm_acc, v_zdiag_acc, v_sqnorm, v_zdotc, "avx2"};

}  // namespace

bool have_avx2() {
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
}

const Dispatch& avx2() { return kAvx2; }

#else

bool have_avx2() { return false; }
const Dispatch& avx2() { return scalar(); }

#endif

}  // namespace cuspidal::kernels
