#pragma once

// Lane-width-agnostic double-precision exp/log1p used by the SIMD kernel
// variants. The Pack type supplies the arithmetic; the polynomial algorithms
// live here once so AVX2 and NEON share the same numerics.
//
// Only the ranges the kernels actually hit are supported:
//   exp_nonpos:  x <= 0   (inputs below -708 clamp; the true value would be
//                          subnormal or zero anyway)
//   log1p01:     u in [0, 1]
// Accuracy is a few ulp; test_kernels sweeps dense grids against libm.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>

namespace slr::kernels::detail {

// Scalar model of the pack interface. Used for loop remainders and as the
// reference instantiation in tests.
struct ScalarPack {
  double v;
  static constexpr std::size_t width = 1;

  static ScalarPack broadcast(double x) { return {x}; }
  static ScalarPack load(const double* p) { return {*p}; }
  void store(double* p) const { *p = v; }

  friend ScalarPack operator+(ScalarPack a, ScalarPack b) { return {a.v + b.v}; }
  friend ScalarPack operator-(ScalarPack a, ScalarPack b) { return {a.v - b.v}; }
  friend ScalarPack operator*(ScalarPack a, ScalarPack b) { return {a.v * b.v}; }
  friend ScalarPack operator/(ScalarPack a, ScalarPack b) { return {a.v / b.v}; }

  static ScalarPack fma(ScalarPack a, ScalarPack b, ScalarPack c) {
    return {std::fma(a.v, b.v, c.v)};
  }
  static ScalarPack max(ScalarPack a, ScalarPack b) { return {a.v > b.v ? a.v : b.v}; }
  static ScalarPack abs(ScalarPack a) { return {std::fabs(a.v)}; }
  static ScalarPack round_nearest(ScalarPack a) { return {std::nearbyint(a.v)}; }
  // 2^k for integer-valued k in [-1021, 1]
  static ScalarPack exp2i(ScalarPack k) {
    std::uint64_t bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(k.v) + 1023)
                         << 52;
    double r;
    std::memcpy(&r, &bits, sizeof r);
    return {r};
  }
  static ScalarPack select_ge(ScalarPack x, ScalarPack y, ScalarPack a, ScalarPack b) {
    return {x.v >= y.v ? a.v : b.v};
  }
  static ScalarPack select_eq(ScalarPack x, ScalarPack y, ScalarPack a, ScalarPack b) {
    return {x.v == y.v ? a.v : b.v};
  }
  double hsum() const { return v; }
};

template <class P>
struct PackMath {
  // exp(x) for x <= 0.
  static P exp_nonpos(P x) {
    const P kInvLn2 = P::broadcast(1.4426950408889634074);
    const P kLn2Hi = P::broadcast(6.93145751953125e-1);
    const P kLn2Lo = P::broadcast(1.4286068203094172321e-6);

    x = P::max(x, P::broadcast(-708.0));
    P k = P::round_nearest(x * kInvLn2);
    P r = P::fma(k, P::broadcast(0.0) - kLn2Hi, x);
    r = P::fma(k, P::broadcast(0.0) - kLn2Lo, r);

    // Taylor series of e^r on |r| <= ln2/2, truncation error ~4e-18.
    P p = P::broadcast(1.1470745597729724714e-11);
    p = P::fma(p, r, P::broadcast(1.6059043836821614599e-10));
    p = P::fma(p, r, P::broadcast(2.0876756987868098979e-9));
    p = P::fma(p, r, P::broadcast(2.5052108385441718775e-8));
    p = P::fma(p, r, P::broadcast(2.7557319223985890653e-7));
    p = P::fma(p, r, P::broadcast(2.7557319223985890653e-6));
    p = P::fma(p, r, P::broadcast(2.4801587301587301587e-5));
    p = P::fma(p, r, P::broadcast(1.984126984126984127e-4));
    p = P::fma(p, r, P::broadcast(1.3888888888888888889e-3));
    p = P::fma(p, r, P::broadcast(8.3333333333333333333e-3));
    p = P::fma(p, r, P::broadcast(4.1666666666666666667e-2));
    p = P::fma(p, r, P::broadcast(1.6666666666666666667e-1));
    p = P::fma(p, r, P::broadcast(0.5));
    p = P::fma(p, r, P::broadcast(1.0));
    p = P::fma(p, r, P::broadcast(1.0));

    return p * P::exp2i(k);
  }

  // log(1+u) for u in [0, 1].
  static P log1p01(P u) {
    const P kOne = P::broadcast(1.0);
    const P kSqrt2 = P::broadcast(1.4142135623730950488);
    const P kLn2Hi = P::broadcast(6.93145751953125e-1);
    const P kLn2Lo = P::broadcast(1.4286068203094172321e-6);

    P w = kOne + u;
    P d = w - kOne;  // rounding-aware difference

    // w in [1,2]: mantissa reduction needs at most one halving.
    P m = P::select_ge(w, kSqrt2, w * P::broadcast(0.5), w);
    P e = P::select_ge(w, kSqrt2, kOne, P::broadcast(0.0));

    // log(m) = 2 atanh(s), s = (m-1)/(m+1), s^2 <= 0.0295
    P s = (m - kOne) / (m + kOne);
    P z = s * s;
    P p = P::broadcast(1.0 / 23.0);
    p = P::fma(p, z, P::broadcast(1.0 / 21.0));
    p = P::fma(p, z, P::broadcast(1.0 / 19.0));
    p = P::fma(p, z, P::broadcast(1.0 / 17.0));
    p = P::fma(p, z, P::broadcast(1.0 / 15.0));
    p = P::fma(p, z, P::broadcast(1.0 / 13.0));
    p = P::fma(p, z, P::broadcast(1.0 / 11.0));
    p = P::fma(p, z, P::broadcast(1.0 / 9.0));
    p = P::fma(p, z, P::broadcast(1.0 / 7.0));
    p = P::fma(p, z, P::broadcast(1.0 / 5.0));
    p = P::fma(p, z, P::broadcast(1.0 / 3.0));
    p = P::fma(p, z, kOne);
    P logm = s * (p + p);

    P logw = P::fma(e, kLn2Lo, logm);
    logw = P::fma(e, kLn2Hi, logw);

    // Recover the bits lost in 1+u, and the exact value for tiny u.
    P corr = (u - d) / w;
    P res = logw + corr;
    return P::select_eq(d, P::broadcast(0.0), u, res);
  }

  // 1/(1+exp(-t)), stable for either sign.
  static P sigmoid(P t) {
    const P kOne = P::broadcast(1.0);
    P a = P::abs(t);
    P ex = exp_nonpos(P::broadcast(0.0) - a);
    P s = ex / (kOne + ex);
    return P::select_ge(t, P::broadcast(0.0), kOne - s, s);
  }

  // ln(1+exp(t)) = max(t,0) + log1p(exp(-|t|))
  static P softplus(P t) {
    P m = P::max(t, P::broadcast(0.0));
    P ex = exp_nonpos(P::broadcast(0.0) - P::abs(t));
    return m + log1p01(ex);
  }
};

}  // namespace slr::kernels::detail
