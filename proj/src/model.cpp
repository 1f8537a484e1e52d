#include "gpm/model.hpp"

#include <string>

#include "gpm/error.hpp"

namespace gpm {
namespace {

// log P(a, e^lz), keeping precision when e^lz underflows.
double log_p_of_log_z(double a, double lz) {
  const double z = std::exp(lz);
  if (z == 0.0) return a * lz - log_gamma_fn(a + 1.0);
  return log_gamma_p(a, z);
}

double log_q_of_log_z(double a, double lz) {
  const double z = std::exp(lz);
  if (z == 0.0) return log1m_exp(a * lz - log_gamma_fn(a + 1.0));
  return log_gamma_q(a, z);
}

}  // namespace

Activation Activation::from_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw NumericalError("BAD_PARAM", "activation probability must lie in [0, 1]");
  return {std::log(p), std::log1p(-p)};
}

double linear_predictor(std::span<const double> beta, std::span<const double> covariates) {
  if (beta.size() != covariates.size()) {
    throw NumericalError("DIMENSION_MISMATCH", "beta has " + std::to_string(beta.size()) +
                                                   " entries but covariates have " +
                                                   std::to_string(covariates.size()));
  }
  double l = 0.0;
  for (std::size_t v = 0; v < beta.size(); ++v) l += beta[v] * covariates[v];
  return l;
}

double logistic_activation(std::span<const double> beta, std::span<const double> covariates) {
  return Activation::from_linear(linear_predictor(beta, covariates)).p();
}

double finite_log_cdf(double x, const ModeShape& s) {
  const double lz = log_gamma_argument(x, s);
  return s.k > 0.0 ? log_p_of_log_z(s.m, lz) : log_q_of_log_z(s.m, lz);
}

double finite_log_tail(double x, const ModeShape& s) {
  const double lz = log_gamma_argument(x, s);
  return s.k > 0.0 ? log_q_of_log_z(s.m, lz) : log_p_of_log_z(s.m, lz);
}

double mode_log_density(double x, const Activation& a, const ModeShape& s) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw NumericalError("BAD_TIME", "mode density is only defined for 0 < x < inf");
  }
  if (a.log_p == kNegInf) return kNegInf;
  const double lz = log_gamma_argument(x, s);
  return a.log_p + std::log(std::fabs(s.k)) - log_gamma_fn(s.m) + s.m * lz - std::log(x) - std::exp(lz);
}

double mode_log_density(double x, double p, double k, double m, double r) {
  return mode_log_density(x, Activation::from_probability(p), ModeShape{k, m, r});
}

double mode_cdf(double x, double p, double k, double m, double r) {
  if (!(x > 0.0)) throw NumericalError("BAD_TIME", "mode CDF requires x > 0");
  if (x == kInf) return p;
  const Activation a = Activation::from_probability(p);
  if (a.log_p == kNegInf) return 0.0;
  return std::exp(a.log_p + finite_log_cdf(x, ModeShape{k, m, r}));
}

double mode_log_survival(double x, const Activation& a, const ModeShape& s) {
  if (a.log_p == kNegInf) return 0.0;
  return log_add_exp(a.log_not_p, a.log_p + finite_log_tail(x, s));
}

std::vector<ModeSlice> mode_slices(std::span<const ModeParams> modes,
                                   std::span<const double> covariates) {
  std::vector<ModeSlice> out;
  out.reserve(modes.size());
  for (const ModeParams& mode : modes) {
    out.push_back({Activation::from_linear(linear_predictor(mode.beta, covariates)), shape_of(mode)});
  }
  return out;
}

double combined_log_survival(double t, std::span<const ModeSlice> modes) {
  double acc = 0.0;
  for (const ModeSlice& mode : modes) acc += mode_log_survival(t, mode.activation, mode.shape);
  return acc;
}

double combined_survival(double t, std::span<const ModeSlice> modes) {
  return std::exp(combined_log_survival(t, modes));
}

double combined_log_density(double t, std::span<const ModeSlice> modes) {
  const std::size_t J = modes.size();
  std::vector<double> log_surv(J);
  for (std::size_t j = 0; j < J; ++j) log_surv[j] = mode_log_survival(t, modes[j].activation, modes[j].shape);
  std::vector<double> terms(J);
  for (std::size_t j = 0; j < J; ++j) {
    double term = mode_log_density(t, modes[j].activation, modes[j].shape);
    for (std::size_t other = 0; other < J; ++other) {
      if (other != j) term += log_surv[other];
    }
    terms[j] = term;
  }
  return log_sum_exp(terms);
}

double combined_hazard(double t, std::span<const ModeSlice> modes) {
  double h = 0.0;
  for (const ModeSlice& mode : modes) {
    const double lf = mode_log_density(t, mode.activation, mode.shape);
    if (lf == kNegInf) continue;
    h += std::exp(lf - mode_log_survival(t, mode.activation, mode.shape));
  }
  return h;
}

double combined_log_cure(std::span<const ModeSlice> modes) {
  double acc = 0.0;
  for (const ModeSlice& mode : modes) acc += mode.activation.log_not_p;
  return acc;
}

}  // namespace gpm
