#include <cmath>

#include "slr/kernels.hpp"

// Reference implementations. Plain loops, plain libm; everything else is
// measured against these.

namespace slr::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double nrm2sq_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double wdot_scalar(const double* a, const double* w, const double* b,
                   std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * w[i] * b[i];
  return s;
}

void sigmoid_scalar(const double* theta, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double t = theta[i];
    double e = std::exp(-std::fabs(t));
    double s = e / (1.0 + e);
    out[i] = t >= 0.0 ? 1.0 - s : s;
  }
}

double softplus_sum_scalar(const double* theta, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = theta[i];
    s += (t > 0.0 ? t : 0.0) + std::log1p(std::exp(-std::fabs(t)));
  }
  return s;
}

const Ops kScalarOps = {
    "scalar",       dot_scalar,     nrm2sq_scalar,
    axpy_scalar,    wdot_scalar,    sigmoid_scalar,
    softplus_sum_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace slr::kernels
