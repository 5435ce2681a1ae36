// NEON kernel variants (aarch64). Same pack algorithms as AVX2 via
// simd_math.hpp; only the two-lane wrappers differ.

#include "slr/kernels.hpp"

#if defined(__ARM_NEON) && defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

#include "simd_math.hpp"

namespace slr::kernels {
namespace {

struct NeonPack {
  float64x2_t v;
  static constexpr std::size_t width = 2;

  static NeonPack broadcast(double x) { return {vdupq_n_f64(x)}; }
  static NeonPack load(const double* p) { return {vld1q_f64(p)}; }
  void store(double* p) const { vst1q_f64(p, v); }

  friend NeonPack operator+(NeonPack a, NeonPack b) { return {vaddq_f64(a.v, b.v)}; }
  friend NeonPack operator-(NeonPack a, NeonPack b) { return {vsubq_f64(a.v, b.v)}; }
  friend NeonPack operator*(NeonPack a, NeonPack b) { return {vmulq_f64(a.v, b.v)}; }
  friend NeonPack operator/(NeonPack a, NeonPack b) { return {vdivq_f64(a.v, b.v)}; }

  static NeonPack fma(NeonPack a, NeonPack b, NeonPack c) {
    return {vfmaq_f64(c.v, a.v, b.v)};
  }
  static NeonPack max(NeonPack a, NeonPack b) { return {vmaxq_f64(a.v, b.v)}; }
  static NeonPack abs(NeonPack a) { return {vabsq_f64(a.v)}; }
  static NeonPack round_nearest(NeonPack a) { return {vrndnq_f64(a.v)}; }
  static NeonPack exp2i(NeonPack k) {
    int64x2_t k64 = vcvtnq_s64_f64(k.v);
    int64x2_t bits = vshlq_n_s64(vaddq_s64(k64, vdupq_n_s64(1023)), 52);
    return {vreinterpretq_f64_s64(bits)};
  }
  static NeonPack select_ge(NeonPack x, NeonPack y, NeonPack a, NeonPack b) {
    uint64x2_t m = vcgeq_f64(x.v, y.v);
    return {vbslq_f64(m, a.v, b.v)};
  }
  static NeonPack select_eq(NeonPack x, NeonPack y, NeonPack a, NeonPack b) {
    uint64x2_t m = vceqq_f64(x.v, y.v);
    return {vbslq_f64(m, a.v, b.v)};
  }
  double hsum() const { return vaddvq_f64(v); }
};

using Math = detail::PackMath<NeonPack>;
using ScalarMath = detail::PackMath<detail::ScalarPack>;

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double nrm2sq_neon(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t x = vld1q_f64(a + i);
    acc = vfmaq_f64(acc, x, x);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  float64x2_t al = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), al, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double wdot_neon(const double* a, const double* w, const double* b,
                 std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t aw = vmulq_f64(vld1q_f64(a + i), vld1q_f64(w + i));
    acc = vfmaq_f64(acc, aw, vld1q_f64(b + i));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * w[i] * b[i];
  return s;
}

void sigmoid_neon(const double* theta, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    Math::sigmoid(NeonPack::load(theta + i)).store(out + i);
  }
  for (; i < n; ++i) {
    out[i] = ScalarMath::sigmoid(detail::ScalarPack{theta[i]}).v;
  }
}

double softplus_sum_neon(const double* theta, std::size_t n) {
  NeonPack acc = NeonPack::broadcast(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = acc + Math::softplus(NeonPack::load(theta + i));
  }
  double s = acc.hsum();
  for (; i < n; ++i) {
    s += ScalarMath::softplus(detail::ScalarPack{theta[i]}).v;
  }
  return s;
}

const Ops kNeonOps = {
    "neon",       dot_neon,     nrm2sq_neon,
    axpy_neon,    wdot_neon,    sigmoid_neon,
    softplus_sum_neon,
};

}  // namespace

const Ops* neon_ops() { return &kNeonOps; }

}  // namespace slr::kernels

#else

namespace slr::kernels {
const Ops* neon_ops() { return nullptr; }
}  // namespace slr::kernels

#endif
