#include <array>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>

#include "gpm/error.hpp"
#include "gpm/prediction.hpp"
#include "gpm/special.hpp"
#include "gpm/stats.hpp"

namespace gpm {
namespace {

// Parameters: location xi, log scale, slant alpha, log(nu - 1).
using SkewParams = std::array<double, 4>;

double skew_student_log_lik(std::span<const double> xs, const SkewParams& p) {
  const double xi = p[0];
  const double omega = std::exp(p[1]);
  const double alpha = p[2];
  const double nu = 1.0 + std::exp(p[3]);
  if (!std::isfinite(omega) || !std::isfinite(nu) || nu > 1e6) return kNegInf;
  const boost::math::students_t_distribution<double> tail(nu + 1.0);
  const double log_norm = log_gamma_fn(0.5 * (nu + 1.0)) - log_gamma_fn(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
  double ll = 0.0;
  for (double x : xs) {
    const double z = (x - xi) / omega;
    const double log_t = log_norm - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
    const double arg = alpha * z * std::sqrt((nu + 1.0) / (nu + z * z));
    double cdf = boost::math::cdf(tail, arg);
    if (!(cdf > 1e-300)) cdf = 1e-300;
    ll += std::log(2.0) + log_t - p[1] + std::log(cdf);
  }
  return ll;
}

// Weak priors: flat on location and log scale, N(0, 5^2) on the slant,
// N(log 4, 1.5^2) on log(nu - 1).
double skew_student_log_prior(const SkewParams& p) {
  const double a = p[2] / 5.0;
  const double b = (p[3] - std::log(4.0)) / 1.5;
  return -0.5 * (a * a + b * b);
}

double skew_student_mean(const SkewParams& p) {
  const double omega = std::exp(p[1]);
  const double nu = 1.0 + std::exp(p[3]);
  const double delta = p[2] / std::sqrt(1.0 + p[2] * p[2]);
  const double b = std::sqrt(nu / std::numbers::pi) *
                   std::exp(log_gamma_fn(0.5 * (nu - 1.0)) - log_gamma_fn(0.5 * nu));
  return p[0] + omega * delta * b;
}

}  // namespace

std::vector<double> skew_student_mean_draws(std::span<const double> values, int n_draws, Rng& rng) {
  if (values.size() < 2) throw UsageError("TOO_FEW_SAMPLES", "skew-Student fit needs at least two values");
  const double sd = std::sqrt(variance_of(values));
  if (!(sd > 0.0)) return std::vector<double>(static_cast<std::size_t>(n_draws), values.front());

  SkewParams cur{mean_of(values), std::log(sd), 0.0, std::log(4.0)};
  double cur_lp = skew_student_log_lik(values, cur) + skew_student_log_prior(cur);
  const double n = static_cast<double>(values.size());
  std::array<double, 4> step{sd / std::sqrt(n), 0.7 / std::sqrt(n), 0.5, 0.5};

  constexpr int kBurn = 3000;
  constexpr int kThin = 5;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_draws));
  const int total = kBurn + n_draws * kThin;
  for (int it = 0; it < total; ++it) {
    for (std::size_t c = 0; c < cur.size(); ++c) {
      SkewParams prop = cur;
      prop[c] += step[c] * standard_normal(rng);
      const double lp = skew_student_log_lik(values, prop) + skew_student_log_prior(prop);
      const bool accept = std::isfinite(lp) && std::log(uniform_open(rng)) < lp - cur_lp;
      if (accept) {
        cur = prop;
        cur_lp = lp;
      }
      if (it < kBurn) {
        // Robbins-Monro towards roughly 40% acceptance per coordinate.
        step[c] *= std::exp((accept ? 0.6 : -0.4) / std::sqrt(1.0 + it));
      }
    }
    if (it >= kBurn && (it - kBurn) % kThin == kThin - 1) out.push_back(skew_student_mean(cur));
  }
  return out;
}

}  // namespace gpm
