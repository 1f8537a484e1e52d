#include "gpm/prior.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "gpm/error.hpp"
#include "gpm/model.hpp"
#include "gpm/stats.hpp"

namespace gpm {
namespace {

constexpr double kQuadTol = 1e-10;

// log of the integral of exp(h) over (0, inf) for a unimodal h, splitting at
// the mode and shifting by the peak value to stay in range.
template <class F>
double log_integral_positive(F h, double mode) {
  const double peak = h(mode);
  auto f = [&](double x) {
    const double v = h(x);
    return v == kNegInf ? 0.0 : std::exp(v - peak);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  const double left = ts.integrate(f, 0.0, mode, kQuadTol);
  const double right = es.integrate(f, mode, std::numeric_limits<double>::infinity(), kQuadTol);
  return peak + std::log(left + right);
}

double mode_of(const std::vector<double>& points, const LogConcaveTarget& target) {
  double best = points.front();
  double best_h = kNegInf;
  for (double x : points) {
    const double h = target.eval(x).value;
    if (h > best_h) {
      best_h = h;
      best = x;
    }
  }
  return best;
}

}  // namespace

Prior::Prior(Hyperparams hyper) : hyper_(std::move(hyper)) {
  hyper_.validate();
  const double alpha = hyper_.alpha_J;
  if (hyper_.max_modes > 0 && alpha > 0.0) {
    log_J_norm_ = log1m_exp(hyper_.max_modes * std::log(alpha));
  }

  const LogConcaveTarget kp = k_branch_target(1.0);
  const LogConcaveTarget kn = k_branch_target(-1.0);
  const LogConcaveTarget mt = m_target();
  k_init_pos_ = ars_initial_points(kp, 1.0);
  k_init_neg_ = ars_initial_points(kn, 1.0);
  m_init_ = ars_initial_points(mt, 1.0);

  auto hk_pos = [&](double x) { return log_k_kernel(x); };
  auto hk_neg = [&](double x) { return log_k_kernel(-x); };
  auto hm = [&](double x) { return log_m_kernel(x); };
  const double log_pos = log_integral_positive(hk_pos, mode_of(k_init_pos_, kp));
  const double log_neg = log_integral_positive(hk_neg, mode_of(k_init_neg_, kn));
  log_k_norm_ = log_add_exp(log_pos, log_neg);
  prob_k_positive_ = std::exp(log_pos - log_k_norm_);
  log_m_norm_ = log_integral_positive(hm, mode_of(m_init_, mt));
}

double Prior::log_k_kernel(double k) const {
  if (k == 0.0) return kNegInf;
  double h = hyper_.a_k * std::log(std::fabs(k));
  for (std::size_t n = 0; n < hyper_.b_k.size(); ++n) {
    const double lb = std::log(hyper_.b_k[n]);
    h += hyper_.c_k[n] * (k * lb - std::exp(k * lb));
  }
  return std::isnan(h) ? kNegInf : h;
}

double Prior::log_m_kernel(double m) const {
  if (!(m > 0.0)) return kNegInf;
  return hyper_.b_m * (m * std::log(m) - log_gamma_fn(m)) - (hyper_.a_m + hyper_.b_m) * m;
}

LogConcaveTarget Prior::k_branch_target(double sign) const {
  const Hyperparams& h = hyper_;
  return {[h, sign](double kappa) {
            double value = h.a_k * std::log(kappa);
            double deriv = h.a_k / kappa;
            for (std::size_t n = 0; n < h.b_k.size(); ++n) {
              const double lb = sign * std::log(h.b_k[n]);
              const double e = std::exp(kappa * lb);
              value += h.c_k[n] * (kappa * lb - e);
              deriv += h.c_k[n] * lb * (1.0 - e);
            }
            return LogDensityPoint{value, deriv};
          },
          0.0, kInf};
}

LogConcaveTarget Prior::m_target() const {
  const double a = hyper_.a_m;
  const double b = hyper_.b_m;
  return {[a, b](double m) {
            return LogDensityPoint{b * (m * std::log(m) - log_gamma_fn(m)) - (a + b) * m,
                                   b * (std::log(m) + 1.0 - digamma(m)) - (a + b)};
          },
          0.0, kInf};
}

double Prior::log_prior_J(int J) const {
  if (J < 1) throw NumericalError("BAD_PARAM", "J must be at least 1");
  if (hyper_.max_modes > 0 && J > hyper_.max_modes) return kNegInf;
  const double alpha = hyper_.alpha_J;
  if (alpha == 0.0) return J == 1 ? 0.0 : kNegInf;
  return std::log1p(-alpha) + (J - 1) * std::log(alpha) - log_J_norm_;
}

double Prior::log_prior_k(double k) const { return log_k_kernel(k) - log_k_norm_; }

double Prior::log_prior_m(double m) const { return log_m_kernel(m) - log_m_norm_; }

double Prior::log_prior_r(double r) const {
  if (!(r > 0.0)) return kNegInf;
  const double a = hyper_.m_r;
  const double b = hyper_.r_r;
  return a * std::log(b) - log_gamma_fn(a) + (a - 1.0) * std::log(r) - b * r;
}

double Prior::log_prior_beta(double beta) const {
  const double g = hyper_.gamma;
  const double x = g * beta;
  return std::log(g) - softplus(x) - softplus(-x);
}

double Prior::log_prior_mode(const ModeParams& mode) const {
  mode.validate(mode.beta.size());
  double lp = log_prior_k(mode.k) + log_prior_m(mode.m) + log_prior_r(mode.r);
  for (double b : mode.beta) lp += log_prior_beta(b);
  return lp;
}

int Prior::sample_J(Rng& rng) const {
  const double alpha = hyper_.alpha_J;
  const double u = uniform_open(rng);
  if (alpha == 0.0) return 1;
  const double tail = hyper_.max_modes > 0 ? std::exp(hyper_.max_modes * std::log(alpha)) : 0.0;
  const double j = std::ceil(std::log1p(-u * (1.0 - tail)) / std::log(alpha));
  int J = j < 1.0 ? 1 : (j > 1e9 ? 1000000000 : static_cast<int>(j));
  if (hyper_.max_modes > 0) J = std::min(J, hyper_.max_modes);
  return J;
}

double Prior::sample_k(Rng& rng) const {
  const bool positive = uniform_open(rng) < prob_k_positive_;
  const double sign = positive ? 1.0 : -1.0;
  const double kappa = ars_sample(k_branch_target(sign), positive ? k_init_pos_ : k_init_neg_, rng);
  return sign * kappa;
}

double Prior::sample_m(Rng& rng) const { return ars_sample(m_target(), m_init_, rng); }

double Prior::sample_r(Rng& rng) const { return gamma_variate(hyper_.m_r, hyper_.r_r, rng); }

double Prior::sample_beta(Rng& rng) const {
  const double u = uniform_open(rng);
  return (std::log(u) - std::log1p(-u)) / hyper_.gamma;
}

ModeParams Prior::sample_mode(std::size_t n_covariates, Rng& rng) const {
  ModeParams mode;
  mode.k = sample_k(rng);
  mode.m = sample_m(rng);
  mode.r = sample_r(rng);
  mode.beta.resize(n_covariates);
  for (double& b : mode.beta) b = sample_beta(rng);
  return mode;
}

ModelState Prior::sample_state(std::size_t n_covariates, Rng& rng) const {
  ModelState state;
  const int J = sample_J(rng);
  state.modes.reserve(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) state.modes.push_back(sample_mode(n_covariates, rng));
  return state;
}

double log_prior_J(int J, const Hyperparams& hyper) {
  if (J < 1) throw NumericalError("BAD_PARAM", "J must be at least 1");
  hyper.validate();
  if (hyper.max_modes > 0 && J > hyper.max_modes) return kNegInf;
  const double alpha = hyper.alpha_J;
  if (alpha == 0.0) return J == 1 ? 0.0 : kNegInf;
  double lp = std::log1p(-alpha) + (J - 1) * std::log(alpha);
  if (hyper.max_modes > 0) lp -= log1m_exp(hyper.max_modes * std::log(alpha));
  return lp;
}

double log_prior_mode(const ModeParams& mode, const Hyperparams& hyper) {
  return Prior(hyper).log_prior_mode(mode);
}

PriorPredictiveCurves prior_predictive_curves(const Prior& prior,
                                              std::span<const std::vector<double>> covariate_rows,
                                              Rng& rng, int n_curves, std::span<const double> grid) {
  if (grid.empty()) throw UsageError("BAD_GRID", "time grid must be nonempty");
  for (double t : grid) {
    if (!(t > 0.0) || !std::isfinite(t)) throw UsageError("BAD_GRID", "time grid values must be positive");
  }
  if (covariate_rows.empty()) throw UsageError("BAD_COVARIATES", "need at least one covariate row");
  if (n_curves < 1) throw UsageError("BAD_PARAM", "need at least one curve");

  PriorPredictiveCurves out;
  out.grid.assign(grid.begin(), grid.end());
  const std::size_t G = grid.size();
  out.survival.reserve(static_cast<std::size_t>(n_curves));
  out.hazard.reserve(static_cast<std::size_t>(n_curves));
  std::uniform_int_distribution<std::size_t> pick(0, covariate_rows.size() - 1);
  for (int c = 0; c < n_curves; ++c) {
    const std::vector<double>& row = covariate_rows[pick(rng)];
    const ModelState state = prior.sample_state(row.size(), rng);
    const std::vector<ModeSlice> slices = mode_slices(state.modes, row);
    std::vector<double> s(G), h(G);
    for (std::size_t g = 0; g < G; ++g) {
      s[g] = combined_survival(grid[g], slices);
      h[g] = combined_hazard(grid[g], slices);
    }
    out.survival.push_back(std::move(s));
    out.hazard.push_back(std::move(h));
  }

  auto summarize = [&](const std::vector<std::vector<double>>& curves, std::vector<double>& mean,
                       std::vector<double>& lo, std::vector<double>& hi) {
    mean.resize(G);
    lo.resize(G);
    hi.resize(G);
    std::vector<double> column(curves.size());
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t c = 0; c < curves.size(); ++c) column[c] = curves[c][g];
      std::sort(column.begin(), column.end());
      mean[g] = mean_of(column);
      lo[g] = quantile_sorted(column, 0.025);
      hi[g] = quantile_sorted(column, 0.975);
    }
  };
  summarize(out.survival, out.survival_mean, out.survival_lo, out.survival_hi);
  summarize(out.hazard, out.hazard_mean, out.hazard_lo, out.hazard_hi);
  return out;
}

}  // namespace gpm
