#pragma once

// Data-parallel inner loops of the sampler. Every kernel has a scalar
// reference implementation and, where the CPU allows it, an AVX2 variant;
// the variant is chosen once at startup (overridable through the GPM_SIMD
// environment variable or set_backend) and the two are equivalence-tested.

#include <cstddef>
#include <span>
#include <string_view>

namespace gpm::simd {

enum class Backend { Scalar, Avx2 };

struct PowerSums {
  double sum_exp = 0.0;    // sum_i exp(k * s_i)
  double sum_s_exp = 0.0;  // sum_i s_i * exp(k * s_i)
};

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  PowerSums (*power_sums)(const double* s, std::size_t n, double k);
  double (*softplus_sigmoid)(const double* l, const double* w, double* sigmoid, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(GPM_HAVE_AVX2_KERNELS)
const KernelTable& avx2_kernels();
#endif

bool backend_available(Backend backend);
Backend active_backend();
// Not thread-safe; call before starting worker threads.
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);

const KernelTable& kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline double weighted_dot(std::span<const double> w, std::span<const double> a,
                           std::span<const double> b) {
  return kernels().weighted_dot(w.data(), a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline PowerSums power_sums(std::span<const double> s, double k) {
  return kernels().power_sums(s.data(), s.size(), k);
}

/// Returns sum_i w_i * log(1 + exp(l_i)) and writes 1/(1 + exp(-l_i)) to sigmoid.
inline double softplus_sigmoid(std::span<const double> l, std::span<const double> w,
                               std::span<double> sigmoid) {
  return kernels().softplus_sigmoid(l.data(), w.data(), sigmoid.data(), l.size());
}

}  // namespace gpm::simd
