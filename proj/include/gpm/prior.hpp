#pragma once

#include <span>
#include <vector>

#include "gpm/rng.hpp"
#include "gpm/samplers.hpp"
#include "gpm/types.hpp"

namespace gpm {

/// Prior densities and prior draws for a fixed set of hyperparameters.
/// Constructing a Prior integrates the m- and k-priors once so every
/// log-density it returns is normalized; build one and share it.
class Prior {
 public:
  explicit Prior(Hyperparams hyper = {});

  const Hyperparams& hyper() const { return hyper_; }

  double log_prior_J(int J) const;
  double log_prior_k(double k) const;
  double log_prior_m(double m) const;
  double log_prior_r(double r) const;
  /// Per coefficient, including the gamma factor.
  double log_prior_beta(double beta) const;
  double log_prior_mode(const ModeParams& mode) const;

  /// Unnormalized k log-density a_k log|k| + sum_n c_n (k log b_n - b_n^k).
  double log_k_kernel(double k) const;
  /// Unnormalized m log-density b_m (m log m - lgamma m) - (a_m + b_m) m.
  double log_m_kernel(double m) const;
  double log_k_normalizer() const { return log_k_norm_; }
  double log_m_normalizer() const { return log_m_norm_; }
  /// Prior probability that k > 0.
  double prob_k_positive() const { return prob_k_positive_; }

  int sample_J(Rng& rng) const;
  double sample_k(Rng& rng) const;
  double sample_m(Rng& rng) const;
  double sample_r(Rng& rng) const;
  double sample_beta(Rng& rng) const;
  ModeParams sample_mode(std::size_t n_covariates, Rng& rng) const;
  /// Parameters only; cause and latent tables are left empty.
  ModelState sample_state(std::size_t n_covariates, Rng& rng) const;

  /// Largest J with nonzero prior mass (0 when unbounded).
  int max_modes() const { return hyper_.max_modes; }

 private:
  LogConcaveTarget k_branch_target(double sign) const;
  LogConcaveTarget m_target() const;

  Hyperparams hyper_;
  double log_k_norm_ = 0.0;
  double log_m_norm_ = 0.0;
  double prob_k_positive_ = 0.5;
  double log_J_norm_ = 0.0;
  std::vector<double> k_init_pos_, k_init_neg_, m_init_;
};

/// Free-function forms with a default Prior for the given hyperparameters.
double log_prior_J(int J, const Hyperparams& hyper);
double log_prior_mode(const ModeParams& mode, const Hyperparams& hyper);

struct PriorPredictiveCurves {
  std::vector<double> grid;
  std::vector<std::vector<double>> survival;  // [curve][grid]
  std::vector<std::vector<double>> hazard;
  std::vector<double> survival_mean, survival_lo, survival_hi;
  std::vector<double> hazard_mean, hazard_lo, hazard_hi;
};

/// Survival and hazard curves, each from one prior draw paired with one
/// covariate row picked at random, plus pointwise mean and 2.5%/97.5%
/// centiles.
PriorPredictiveCurves prior_predictive_curves(const Prior& prior,
                                              std::span<const std::vector<double>> covariate_rows,
                                              Rng& rng, int n_curves, std::span<const double> grid);

}  // namespace gpm
