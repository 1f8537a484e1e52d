#include <cmath>

#include "gpm/simd/kernels.hpp"

namespace gpm::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

PowerSums power_sums_scalar(const double* s, std::size_t n, double k) {
  PowerSums out;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(k * s[i]);
    out.sum_exp += e;
    out.sum_s_exp += s[i] * e;
  }
  return out;
}

double softplus_sigmoid_scalar(const double* l, const double* w, double* sigmoid, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = std::exp(-std::fabs(l[i]));
    acc += w[i] * (std::fmax(l[i], 0.0) + std::log1p(z));
    sigmoid[i] = l[i] >= 0.0 ? 1.0 / (1.0 + z) : z / (1.0 + z);
  }
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{dot_scalar, weighted_dot_scalar, axpy_scalar, power_sums_scalar,
                                 softplus_sigmoid_scalar};
  return table;
}

}  // namespace gpm::simd
