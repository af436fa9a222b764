#pragma once

// Data-parallel complex primitives used by the ODE integrator and the
// quadrature loops.  A scalar reference implementation always exists;
// on x86 an AVX2+FMA variant is selected at runtime.  The environment
// variable CUSPIDAL_SIMD=scalar|avx2 forces a lane.
//
// All arrays are interleaved complex doubles (std::complex<double>
// layout), column-major where a matrix shape applies.

#include <complex>
#include <cstddef>
#include <string>

namespace cuspidal::kernels {

using cplx = std::complex<double>;

struct Dispatch {
  // y[i] += alpha * x[i]
  void (*zaxpy)(std::size_t n, cplx alpha, const cplx* x, cplx* y);
  // C (m x n) += A (m x m) * B (m x n), column-major
  void (*zgemm_acc)(std::size_t m, std::size_t n, const cplx* a, const cplx* b, cplx* c);
  // Y(i,j) += d[i] * X(i,j), column-major m x n
  void (*zdiag_acc)(std::size_t m, std::size_t n, const cplx* d, const cplx* x, cplx* y);
  // sum |x[i]|^2
  double (*sqnorm)(std::size_t n, const cplx* x);
  // sum x[i] * conj(y[i])
  cplx (*zdotc)(std::size_t n, const cplx* x, const cplx* y);
  const char* name;
};

// Active implementation (initialized on first use, thread-safe).
const Dispatch& active();

// Named implementations, for equivalence tests.
const Dispatch& scalar();
bool have_avx2();          // compiled in and supported by this CPU
const Dispatch& avx2();    // valid only if have_avx2()

inline void zaxpy(std::size_t n, cplx a, const cplx* x, cplx* y) { active().zaxpy(n, a, x, y); }
inline void zgemm_acc(std::size_t m, std::size_t n, const cplx* a, const cplx* b, cplx* c) {
  active().zgemm_acc(m, n, a, b, c);
}
inline void zdiag_acc(std::size_t m, std::size_t n, const cplx* d, const cplx* x, cplx* y) {
  active().zdiag_acc(m, n, d, x, y);
}
inline double sqnorm(std::size_t n, const cplx* x) { return active().sqnorm(n, x); }
inline cplx zdotc(std::size_t n, const cplx* x, const cplx* y) { return active().zdotc(n, x, y); }

}  // namespace cuspidal::kernels
