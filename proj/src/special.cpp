#include "gpm/special.hpp"

#include <algorithm>
#include <limits>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "gpm/error.hpp"

namespace gpm {
namespace {

constexpr double kEps = 1e-16;
// Convergence of the continued fraction is judged against 1, where double
// spacing is 2.2e-16.
constexpr double kFractionEps = 4.0 * std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 200000;

// Both expansions return NaN when they fail to converge; callers then fall
// back to the linear-space regularized functions.
// log of a^-1 + z/(a(a+1)) + z^2/(a(a+1)(a+2)) + ...
double log_series_sum(double a, double z) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIterations; ++n) {
    ap += 1.0;
    del *= z / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) return std::log(sum);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// log of the continued fraction of Q(a, z) (modified Lentz).
double log_continued_fraction(double a, double z) {
  double b = z + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kFractionEps) return std::log(h);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double linear_fallback(double value) {
  if (!(value > 0.0)) throw NumericalError("INCOMPLETE_GAMMA", "incomplete gamma failed to converge");
  return std::log(value);
}

void check_shape(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw NumericalError("INCOMPLETE_GAMMA", "incomplete gamma shape must be positive and finite");
  }
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf || hi == kInf) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double log_gamma_fn(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double digamma(double x) { return boost::math::digamma(x); }
double trigamma(double x) { return boost::math::trigamma(x); }

double log_gamma_p(double a, double z) {
  check_shape(a);
  if (std::isnan(z)) throw NumericalError("INCOMPLETE_GAMMA", "incomplete gamma argument is NaN");
  if (z <= 0.0) return kNegInf;
  if (z == kInf) return 0.0;
  const double prefix = a * std::log(z) - z - log_gamma_fn(a);
  const double v = z < a + 1.0 ? prefix + log_series_sum(a, z) : log1m_exp(prefix + log_continued_fraction(a, z));
  return std::isnan(v) ? linear_fallback(boost::math::gamma_p(a, z)) : v;
}

double log_gamma_q(double a, double z) {
  check_shape(a);
  if (std::isnan(z)) throw NumericalError("INCOMPLETE_GAMMA", "incomplete gamma argument is NaN");
  if (z <= 0.0) return 0.0;
  if (z == kInf) return kNegInf;
  const double prefix = a * std::log(z) - z - log_gamma_fn(a);
  const double v = z < a + 1.0 ? log1m_exp(prefix + log_series_sum(a, z)) : prefix + log_continued_fraction(a, z);
  return std::isnan(v) ? linear_fallback(boost::math::gamma_q(a, z)) : v;
}

}  // namespace gpm
