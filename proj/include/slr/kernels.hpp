#pragma once

// Vectorized inner loops shared by the solvers and the Monte Carlo harness.
//
// Every kernel exists as a plain scalar reference implementation plus SIMD
// variants (AVX2+FMA on x86-64, NEON on aarch64). The variant is picked once
// at startup from CPU capabilities; the environment variable SLR_KERNELS
// (values: scalar, avx2, neon) forces a specific one. Scalar and SIMD
// variants are equivalence-tested against each other in tests/test_kernels.

#include <cstddef>
#include <string>

namespace slr::kernels {

struct Ops {
  const char* name;

  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i a[i]^2
  double (*nrm2sq)(const double* a, std::size_t n);
  // y[i] += alpha*x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i a[i]*w[i]*b[i]
  double (*wdot)(const double* a, const double* w, const double* b,
                 std::size_t n);
  // out[i] = 1/(1+exp(-theta[i])), stable for either sign
  void (*sigmoid)(const double* theta, double* out, std::size_t n);
  // sum_i ln(1+exp(theta[i])), computed as max(t,0)+log1p(exp(-|t|))
  double (*softplus_sum)(const double* theta, std::size_t n);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when not compiled in / unsupported
const Ops* neon_ops();

// The dispatch decision (made once, thread-safe).
const Ops& active();
std::string active_name();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double nrm2sq(const double* a, std::size_t n) {
  return active().nrm2sq(a, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline double wdot(const double* a, const double* w, const double* b,
                   std::size_t n) {
  return active().wdot(a, w, b, n);
}
inline void sigmoid(const double* theta, double* out, std::size_t n) {
  active().sigmoid(theta, out, n);
}
inline double softplus_sum(const double* theta, std::size_t n) {
  return active().softplus_sum(theta, n);
}

}  // namespace slr::kernels
