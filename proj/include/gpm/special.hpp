#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace gpm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// log(exp(a) + exp(b)).
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

/// log(1 - exp(x)) for x <= 0.
inline double log1m_exp(double x) {
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

double log_sum_exp(std::span<const double> values);

/// Thread-safe log Gamma(x) for x > 0.
double log_gamma_fn(double x);
double digamma(double x);
double trigamma(double x);

/// log of the regularized lower incomplete gamma P(a, z); accurate far into
/// both tails (no underflow to -inf while the true value is representable in
/// log space).
double log_gamma_p(double a, double z);
/// log of the regularized upper incomplete gamma Q(a, z) = 1 - P(a, z).
double log_gamma_q(double a, double z);

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace gpm
