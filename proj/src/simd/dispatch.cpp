#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gpm/simd/kernels.hpp"

namespace gpm::simd {
namespace {

bool cpu_has_avx2() {
#if defined(GPM_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("GPM_SIMD")) {
    const std::string value(env);
    if (value == "scalar") return Backend::Scalar;
    if (value == "avx2" && cpu_has_avx2()) return Backend::Avx2;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

}  // namespace

bool backend_available(Backend backend) {
  return backend == Backend::Scalar || cpu_has_avx2();
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw std::invalid_argument("SIMD backend " + std::string(backend_name(backend)) +
                                " is not available on this CPU/build");
  }
  backend_slot().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& kernels() {
#if defined(GPM_HAVE_AVX2_KERNELS)
  if (active_backend() == Backend::Avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

}  // namespace gpm::simd
