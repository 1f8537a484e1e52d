// AVX2 + FMA variants of the kernels in kernels_scalar.cpp. Compiled with
// -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "gpm/simd/kernels.hpp"

namespace gpm::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d pow2_from_int32(__m128i e) {
  __m256i e64 = _mm256_cvtepi32_epi64(e);
  e64 = _mm256_add_epi64(e64, _mm256_set1_epi64x(1023));
  return _mm256_castsi256_pd(_mm256_slli_epi64(e64, 52));
}

// exp(x) to within a couple of ulp of std::exp, including the subnormal range.
inline __m256d exp_pd(__m256d x) {
  const __m256d max_arg = _mm256_set1_pd(709.782712893384);
  const __m256d min_arg = _mm256_set1_pd(-745.1332191019412);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);

  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, min_arg), max_arg);
  const __m256d n =
      _mm256_round_pd(_mm256_mul_pd(xc, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, xc);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  // Taylor series through r^13; |r| <= ln2/2 keeps the truncation below 1e-17.
  static constexpr double kInvFact[] = {
      1.0,
      1.0,
      1.0 / 2.0,
      1.0 / 6.0,
      1.0 / 24.0,
      1.0 / 120.0,
      1.0 / 720.0,
      1.0 / 5040.0,
      1.0 / 40320.0,
      1.0 / 362880.0,
      1.0 / 3628800.0,
      1.0 / 39916800.0,
      1.0 / 479001600.0,
      1.0 / 6227020800.0,
  };
  __m256d p = _mm256_set1_pd(kInvFact[13]);
  for (int i = 12; i >= 0; --i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[i]));

  // Split 2^n into two factors so that n in [-1075, 1024] never leaves the
  // normal exponent range; the final product rounds gracefully to subnormal.
  const __m128i ni = _mm256_cvtpd_epi32(n);
  const __m128i n1 = _mm_srai_epi32(ni, 1);
  const __m128i n2 = _mm_sub_epi32(ni, n1);
  __m256d result = _mm256_mul_pd(_mm256_mul_pd(p, pow2_from_int32(n1)), pow2_from_int32(n2));

  result = _mm256_blendv_pd(result, _mm256_set1_pd(HUGE_VAL), _mm256_cmp_pd(x, max_arg, _CMP_GT_OQ));
  result = _mm256_blendv_pd(result, _mm256_setzero_pd(), _mm256_cmp_pd(x, min_arg, _CMP_LT_OQ));
  result = _mm256_blendv_pd(result, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
  return result;
}

// log(1 + z) for z in [0, 1] via 2 atanh(z / (2 + z)); no cancellation for small z.
inline __m256d log1p_unit_pd(__m256d z) {
  const __m256d u = _mm256_div_pd(z, _mm256_add_pd(_mm256_set1_pd(2.0), z));
  const __m256d w = _mm256_mul_pd(u, u);
  __m256d s = _mm256_set1_pd(1.0 / 39.0);
  for (int n = 18; n >= 0; --n) s = _mm256_fmadd_pd(s, w, _mm256_set1_pd(1.0 / (2.0 * n + 1.0)));
  return _mm256_mul_pd(_mm256_add_pd(u, u), s);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double weighted_dot_avx2(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b + i), acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += w[i] * a[i] * b[i];
  return out;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

PowerSums power_sums_avx2(const double* s, std::size_t n, double k) {
  const __m256d vk = _mm256_set1_pd(k);
  __m256d acc_e = _mm256_setzero_pd();
  __m256d acc_se = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vs = _mm256_loadu_pd(s + i);
    const __m256d e = exp_pd(_mm256_mul_pd(vk, vs));
    acc_e = _mm256_add_pd(acc_e, e);
    acc_se = _mm256_fmadd_pd(vs, e, acc_se);
  }
  PowerSums out{hsum(acc_e), hsum(acc_se)};
  for (; i < n; ++i) {
    const double e = std::exp(k * s[i]);
    out.sum_exp += e;
    out.sum_s_exp += s[i] * e;
  }
  return out;
}

double softplus_sigmoid_avx2(const double* l, const double* w, double* sigmoid, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vl = _mm256_loadu_pd(l + i);
    const __m256d neg_abs = _mm256_or_pd(vl, sign_mask);
    const __m256d z = exp_pd(neg_abs);
    const __m256d sp = _mm256_add_pd(_mm256_max_pd(vl, _mm256_setzero_pd()), log1p_unit_pd(z));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), sp, acc);
    const __m256d denom = _mm256_add_pd(one, z);
    const __m256d nonneg = _mm256_cmp_pd(vl, _mm256_setzero_pd(), _CMP_GE_OQ);
    const __m256d numer = _mm256_blendv_pd(z, one, nonneg);
    _mm256_storeu_pd(sigmoid + i, _mm256_div_pd(numer, denom));
  }
  double out = hsum(acc);
  for (; i < n; ++i) {
    const double z = std::exp(-std::fabs(l[i]));
    out += w[i] * (std::fmax(l[i], 0.0) + std::log1p(z));
    sigmoid[i] = l[i] >= 0.0 ? 1.0 / (1.0 + z) : z / (1.0 + z);
  }
  return out;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{dot_avx2, weighted_dot_avx2, axpy_avx2, power_sums_avx2,
                                 softplus_sigmoid_avx2};
  return table;
}

}  // namespace gpm::simd
