#pragma once

// Reference implementations used only by the tests. They are written
// directly from the closed forms, in linear space where that is safe, and
// share no code with the library beyond the hyperparameter struct.

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <functional>
#include <numbers>
#include <vector>

#include "gpm/types.hpp"

namespace oracle {

/// p |k| (m r^k)^m / Gamma(m) x^(mk - 1) exp(-m (r x)^k)
inline double mode_density(double x, double p, double k, double m, double r) {
  const double z = m * std::pow(r * x, k);
  return p * std::fabs(k) * std::exp(m * std::log(z) - std::lgamma(m) - z) / x;
}

/// p F(x), F the Gamma(m) CDF of m (r x)^k for k > 0 and its tail for k < 0.
inline double mode_cdf(double x, double p, double k, double m, double r) {
  const double z = m * std::pow(r * x, k);
  return p * (k > 0 ? boost::math::gamma_p(m, z) : boost::math::gamma_q(m, z));
}

/// Integral over (0, inf) of a density shaped like one mode with (k, m, r),
/// by adaptive quadrature in u = log x around the peak of the Gamma(m)
/// variate z = m (r x)^k.
inline double integrate_mode_shaped(const std::function<double(double)>& density, double k, double m, double r) {
  const auto f = [&](double u) {
    const double x = std::exp(u);
    // Below the smallest normal double the mass is negligible but the
    // density itself can overflow.
    if (!(x >= std::numeric_limits<double>::min()) || !std::isfinite(x)) return 0.0;
    return density(x) * x;
  };
  const double u0 = -std::log(r);
  const double width = 1.0 / std::fabs(k);
  // The left tail of log z decays like exp(m log z).
  const double half = (25.0 / m + 40.0) * width;
  const int pieces = 400;
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double a = u0 - half + 2.0 * half * i / pieces;
    const double b = u0 - half + 2.0 * half * (i + 1) / pieces;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-14);
  }
  return total;
}

/// Tabulated CDF of an unnormalized density on [lo, hi].
class TabulatedCdf {
 public:
  TabulatedCdf(const std::function<double(double)>& density, double lo, double hi, int pieces = 4000)
      : xs_(static_cast<std::size_t>(pieces) + 1), cdf_(xs_.size(), 0.0) {
    for (int i = 0; i <= pieces; ++i) xs_[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / pieces;
    for (std::size_t i = 1; i < xs_.size(); ++i) {
      cdf_[i] = cdf_[i - 1] +
                boost::math::quadrature::gauss_kronrod<double, 15>::integrate(density, xs_[i - 1], xs_[i], 0);
    }
    const double total = cdf_.back();
    for (double& c : cdf_) c /= total;
  }

  double operator()(double x) const {
    if (x <= xs_.front()) return 0.0;
    if (x >= xs_.back()) return 1.0;
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    const double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return cdf_[i - 1] + w * (cdf_[i] - cdf_[i - 1]);
  }

 private:
  std::vector<double> xs_, cdf_;
};

inline double k_prior_unnormalized(double k, const gpm::Hyperparams& h) {
  if (k == 0.0) return 0.0;
  double log_h = h.a_k * std::log(std::fabs(k));
  for (std::size_t n = 0; n < h.b_k.size(); ++n) {
    log_h += h.c_k[n] * (k * std::log(h.b_k[n]) - std::pow(h.b_k[n], k));
  }
  return std::exp(log_h);
}

inline double m_prior_unnormalized(double m, const gpm::Hyperparams& h) {
  if (m <= 0.0) return 0.0;
  return std::exp(h.b_m * (m * std::log(m) - std::lgamma(m)) - (h.a_m + h.b_m) * m);
}

inline TabulatedCdf k_prior_cdf(const gpm::Hyperparams& h) {
  return TabulatedCdf([&h](double k) { return k_prior_unnormalized(k, h); }, -40.0, 80.0, 12000);
}

inline TabulatedCdf m_prior_cdf(const gpm::Hyperparams& h) {
  return TabulatedCdf([&h](double m) { return m_prior_unnormalized(m, h); }, 0.0, 60.0, 12000);
}

inline double r_prior_cdf(double r, const gpm::Hyperparams& h) {
  return r <= 0.0 ? 0.0 : boost::math::gamma_p(h.m_r, h.r_r * r);
}

inline double beta_prior_cdf(double b, const gpm::Hyperparams& h) { return 1.0 / (1.0 + std::exp(-h.gamma * b)); }

/// Largest gap between the empirical CDF of `xs` and `cdf`.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  return d;
}

/// Asymptotic Kolmogorov tail with Stephens' small-sample correction.
inline double ks_p_value(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

inline double ks_p_one_sample(const std::vector<double>& xs, const std::function<double(double)>& cdf) {
  return ks_p_value(ks_statistic(xs, cdf), static_cast<double>(xs.size()));
}

inline double ks_p_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  return ks_p_value(ks_two_sample(a, b), na * nb / (na + nb));
}

/// Two-sided p-value of a binomial proportion against p0 (normal approximation).
inline double proportion_p_value(double successes, double n, double p0) {
  const double z = (successes / n - p0) / std::sqrt(p0 * (1.0 - p0) / n);
  return std::erfc(std::fabs(z) / std::numbers::sqrt2);
}

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace oracle
