#pragma once

// Generative model for one patient: J independent competing modes of death,
// each firing with probability p (logistic in the covariates) at a time x
// such that x^k ~ Gamma(shape m, rate m r^k), and otherwise never. The
// patient's event time is the minimum over modes.
//
// Everything is evaluated in log space: m (r x)^k overflows long before the
// densities themselves become unrepresentable.

#include <span>
#include <vector>

#include "gpm/special.hpp"
#include "gpm/types.hpp"

namespace gpm {

/// Activation probability p = 1 / (1 + e^l), stored as (log p, log(1 - p)).
struct Activation {
  double log_p = 0.0;
  double log_not_p = kNegInf;

  static Activation from_linear(double l) { return {-softplus(l), -softplus(-l)}; }
  static Activation from_probability(double p);
  double p() const { return std::exp(log_p); }
};

struct ModeShape {
  double k = 1.0;
  double m = 1.0;
  double r = 0.01;
};

inline ModeShape shape_of(const ModeParams& mode) { return {mode.k, mode.m, mode.r}; }

/// l = covariates . beta. Throws on length mismatch.
double linear_predictor(std::span<const double> beta, std::span<const double> covariates);
/// p = 1 / (1 + exp(covariates . beta)).
double logistic_activation(std::span<const double> beta, std::span<const double> covariates);

/// log z where z = m (r x)^k is the unit-rate Gamma variate matching x.
inline double log_gamma_argument(double x, const ModeShape& s) {
  return std::log(s.m) + s.k * (std::log(s.r) + std::log(x));
}

/// log of the finite-branch CDF F(x) = P(x_mode <= x | mode fires).
double finite_log_cdf(double x, const ModeShape& s);
/// log(1 - F(x)).
double finite_log_tail(double x, const ModeShape& s);

/// log of the density p |k| (m r^k)^m / Gamma(m) x^(mk-1) exp(-m (r x)^k).
/// Throws for x <= 0; returns -inf when p = 0.
double mode_log_density(double x, const Activation& a, const ModeShape& s);
double mode_log_density(double x, double p, double k, double m, double r);

/// p F(x): probability that this mode kills by time x.
double mode_cdf(double x, double p, double k, double m, double r);
/// log(1 - p F(x)).
double mode_log_survival(double x, const Activation& a, const ModeShape& s);

/// One mode as seen by one patient.
struct ModeSlice {
  Activation activation;
  ModeShape shape;
};

std::vector<ModeSlice> mode_slices(std::span<const ModeParams> modes,
                                   std::span<const double> covariates);

double combined_log_survival(double t, std::span<const ModeSlice> modes);
/// prod_j (1 - p_j F_j(t)).
double combined_survival(double t, std::span<const ModeSlice> modes);
/// log of sum_j f_j(t) prod_{j' != j} S_j'(t); -inf when every p_j = 0.
double combined_log_density(double t, std::span<const ModeSlice> modes);
/// sum_j f_j(t) / S_j(t).
double combined_hazard(double t, std::span<const ModeSlice> modes);
/// prod_j (1 - p_j): probability of never dying.
double combined_log_cure(std::span<const ModeSlice> modes);

}  // namespace gpm
