#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "gpm/rng.hpp"
#include "gpm/special.hpp"

namespace gpm {

struct LogDensityPoint {
  double value = kNegInf;
  double derivative = 0.0;
};

/// A log-concave density on the open interval (lower, upper), known up to a
/// constant, together with its derivative.
struct LogConcaveTarget {
  std::function<LogDensityPoint(double)> eval;
  double lower = kNegInf;
  double upper = kInf;
};

/// Tangent-envelope adaptive rejection sampler with squeeze test. The
/// envelope keeps improving across draws, so reusing one sampler for many
/// draws from the same target is cheaper than calling ars_sample repeatedly.
class AdaptiveRejectionSampler {
 public:
  /// init_points must lie in [lower, upper]; when a bound is infinite the
  /// outermost point on that side must have a derivative pointing inwards.
  AdaptiveRejectionSampler(LogConcaveTarget target, std::span<const double> init_points,
                           int max_refinements = 1000);

  double draw(Rng& rng);
  std::size_t n_abscissae() const { return xs_.size(); }

 private:
  void insert(double x, const LogDensityPoint& point);
  void rebuild();
  std::size_t segment_of(double x) const;
  double upper_hull(double x) const;
  double lower_hull(double x) const;

  LogConcaveTarget target_;
  int max_refinements_;
  std::vector<double> xs_, hs_, ds_;
  std::vector<double> z_;         // segment boundaries, size K + 1
  std::vector<double> cum_prob_;  // cumulative segment probabilities
  std::vector<double> log_area_;
};

double ars_sample(const LogConcaveTarget& target, std::span<const double> init_points, Rng& rng);

/// Locates the mode of a log-concave target by bracketing and bisection on
/// the derivative, then returns abscissae around it (about one curvature
/// scale either side) suitable for AdaptiveRejectionSampler.
std::vector<double> ars_initial_points(const LogConcaveTarget& target, double start);

/// Accepts with probability min(1, exp(log_target_delta + log_hastings)).
bool mh_accept(double log_target_delta, double log_hastings, Rng& rng);

/// Proposal used for Gamma targets with shape < 1, chosen by its estimated
/// acceptance rate.
enum class TailProposal { Exponential, Power, Gamma };

/// Deterministic proposal choice for a unit-rate Gamma(shape) truncated to
/// (lower, inf) or (0, upper). Exponential/Power acceptance is estimated by
/// a two-point probe of the target-to-proposal ratio; the untruncated Gamma
/// proposal's acceptance is its probability of landing inside the support.
TailProposal choose_tail_proposal(double shape, double bound, bool bound_is_lower);

inline constexpr int kDefaultMhRefreshes = 50;

/// Gamma(shape, rate) conditioned on exceeding `lower`. Shape >= 1 uses ARS
/// on the (log-concave) truncated density; shape < 1 runs an independence
/// Metropolis-Hastings chain for `mh_refreshes` steps from a proposal draw.
double truncated_gamma_sample(double shape, double rate, double lower, Rng& rng,
                              int mh_refreshes = kDefaultMhRefreshes);
/// Gamma(shape, rate) conditioned on lying below `upper`.
double truncated_gamma_sample_below(double shape, double rate, double upper, Rng& rng,
                                    int mh_refreshes = kDefaultMhRefreshes);

/// Log-scale variants for unit rate. The below-variant samples y / upper on
/// (0, 1) so tiny bounds keep full precision.
double log_truncated_gamma_above(double shape, double lower, Rng& rng,
                                 int mh_refreshes = kDefaultMhRefreshes);
double log_truncated_gamma_below(double shape, double upper, Rng& rng,
                                 int mh_refreshes = kDefaultMhRefreshes);

/// Haar-distributed rotation: Q from the QR decomposition of a Gaussian
/// matrix with R's diagonal made positive, then restricted to det(Q) = +1 by
/// negating the first column when needed.
Eigen::MatrixXd random_rotation(int dim, Rng& rng);

/// Upper-triangular C with C^T C = gram. Throws NumericalError naming the
/// failing pivot when gram is not positive definite.
Eigen::MatrixXd cholesky_upper(const Eigen::MatrixXd& gram);

/// Multivariate Student-t with location, scale matrix and degrees of freedom.
class MultivariateStudent {
 public:
  MultivariateStudent(Eigen::VectorXd mean, const Eigen::MatrixXd& scale, double dof);

  Eigen::VectorXd sample(Rng& rng) const;
  double log_density(const Eigen::VectorXd& x) const;

  const Eigen::VectorXd& mean() const { return mean_; }
  double dof() const { return dof_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_;  // upper, chol^T chol = scale
  double dof_;
  double log_norm_;
};

struct ProposalResult {
  Eigen::VectorXd value;
  double log_hastings = 0.0;  // log q(old | new) - log q(new | old)
};

struct StudentDraw {
  Eigen::VectorXd value;
  MultivariateStudent distribution;
};

/// Draws from a Student proposal centred at `mean`; the returned
/// distribution evaluates the forward proposal density, and the caller
/// builds the reverse one around the recentred point to form the Hastings ratio.
StudentDraw student_proposal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& scale, double dof,
                             Rng& rng);

}  // namespace gpm
