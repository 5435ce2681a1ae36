// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64; none of its code runs unless the dispatcher has
// confirmed CPU support first.

#include "slr/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

#include "simd_math.hpp"

namespace slr::kernels {
namespace {

struct Avx2Pack {
  __m256d v;
  static constexpr std::size_t width = 4;

  static Avx2Pack broadcast(double x) { return {_mm256_set1_pd(x)}; }
  static Avx2Pack load(const double* p) { return {_mm256_loadu_pd(p)}; }
  void store(double* p) const { _mm256_storeu_pd(p, v); }

  friend Avx2Pack operator+(Avx2Pack a, Avx2Pack b) { return {_mm256_add_pd(a.v, b.v)}; }
  friend Avx2Pack operator-(Avx2Pack a, Avx2Pack b) { return {_mm256_sub_pd(a.v, b.v)}; }
  friend Avx2Pack operator*(Avx2Pack a, Avx2Pack b) { return {_mm256_mul_pd(a.v, b.v)}; }
  friend Avx2Pack operator/(Avx2Pack a, Avx2Pack b) { return {_mm256_div_pd(a.v, b.v)}; }

  static Avx2Pack fma(Avx2Pack a, Avx2Pack b, Avx2Pack c) {
    return {_mm256_fmadd_pd(a.v, b.v, c.v)};
  }
  static Avx2Pack max(Avx2Pack a, Avx2Pack b) { return {_mm256_max_pd(a.v, b.v)}; }
  static Avx2Pack abs(Avx2Pack a) {
    return {_mm256_andnot_pd(_mm256_set1_pd(-0.0), a.v)};
  }
  static Avx2Pack round_nearest(Avx2Pack a) {
    return {_mm256_round_pd(a.v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC)};
  }
  static Avx2Pack exp2i(Avx2Pack k) {
    // k holds integer-valued doubles in [-1021, 1]
    __m128i k32 = _mm256_cvtpd_epi32(k.v);
    __m256i k64 = _mm256_cvtepi32_epi64(k32);
    __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    return {_mm256_castsi256_pd(bits)};
  }
  static Avx2Pack select_ge(Avx2Pack x, Avx2Pack y, Avx2Pack a, Avx2Pack b) {
    __m256d m = _mm256_cmp_pd(x.v, y.v, _CMP_GE_OQ);
    return {_mm256_blendv_pd(b.v, a.v, m)};
  }
  static Avx2Pack select_eq(Avx2Pack x, Avx2Pack y, Avx2Pack a, Avx2Pack b) {
    __m256d m = _mm256_cmp_pd(x.v, y.v, _CMP_EQ_OQ);
    return {_mm256_blendv_pd(b.v, a.v, m)};
  }
  double hsum() const {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
  }
};

using Math = detail::PackMath<Avx2Pack>;
using ScalarMath = detail::PackMath<detail::ScalarPack>;

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = Avx2Pack{_mm256_add_pd(acc0, acc1)}.hsum();
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double nrm2sq_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(x, x, acc);
  }
  double s = Avx2Pack{acc}.hsum();
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  __m256d al = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(al, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double wdot_avx2(const double* a, const double* w, const double* b,
                 std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d aw = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(w + i));
    acc = _mm256_fmadd_pd(aw, _mm256_loadu_pd(b + i), acc);
  }
  double s = Avx2Pack{acc}.hsum();
  for (; i < n; ++i) s += a[i] * w[i] * b[i];
  return s;
}

void sigmoid_avx2(const double* theta, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    Math::sigmoid(Avx2Pack::load(theta + i)).store(out + i);
  }
  for (; i < n; ++i) {
    out[i] = ScalarMath::sigmoid(detail::ScalarPack{theta[i]}).v;
  }
}

double softplus_sum_avx2(const double* theta, std::size_t n) {
  Avx2Pack acc = Avx2Pack::broadcast(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = acc + Math::softplus(Avx2Pack::load(theta + i));
  }
  double s = acc.hsum();
  for (; i < n; ++i) {
    s += ScalarMath::softplus(detail::ScalarPack{theta[i]}).v;
  }
  return s;
}

const Ops kAvx2Ops = {
    "avx2",       dot_avx2,     nrm2sq_avx2,
    axpy_avx2,    wdot_avx2,    sigmoid_avx2,
    softplus_sum_avx2,
};

}  // namespace

const Ops* avx2_ops() {
#if defined(__GNUC__) || defined(__clang__)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return &kAvx2Ops;
  }
#endif
  return nullptr;
}

}  // namespace slr::kernels

#else

namespace slr::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace slr::kernels

#endif
