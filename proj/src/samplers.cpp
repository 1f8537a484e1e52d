#include "gpm/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpm/error.hpp"

namespace gpm {
namespace {

constexpr int kMaxAbscissae = 64;

bool usable(const LogDensityPoint& p) {
  return std::isfinite(p.value) && std::isfinite(p.derivative);
}

// log of the integral of exp(h + d (x - x0)) over [a, b].
double segment_log_area(double h, double d, double x0, double a, double b) {
  if (!(b > a)) return kNegInf;
  const double width = b - a;
  if (std::isfinite(width) && std::fabs(d) * width < 1e-12) {
    return h + d * (0.5 * (a + b) - x0) + std::log(width);
  }
  if (d > 0.0) {
    const double ub = d * (b - x0);
    const double ua = d * (a - x0);
    return h + ub + log1m_exp(ua - ub) - std::log(d);
  }
  const double ua = d * (a - x0);
  const double ub = d * (b - x0);
  return h + ua + log1m_exp(ub - ua) - std::log(-d);
}

double segment_sample(double d, double x0, double a, double b, double u) {
  const double width = b - a;
  double x;
  if (std::isfinite(width) && std::fabs(d) * width < 1e-12) {
    x = a + u * width;
  } else if (d > 0.0) {
    const double gap = d * (a - x0) - d * (b - x0);  // <= 0
    x = b + std::log(u + (1.0 - u) * std::exp(gap)) / d;
  } else {
    const double gap = d * (b - x0) - d * (a - x0);  // <= 0
    x = a + std::log((1.0 - u) + u * std::exp(gap)) / d;
  }
  return std::clamp(x, a, b);
}

}  // namespace

AdaptiveRejectionSampler::AdaptiveRejectionSampler(LogConcaveTarget target,
                                                   std::span<const double> init_points,
                                                   int max_refinements)
    : target_(std::move(target)), max_refinements_(max_refinements) {
  if (init_points.empty()) throw NumericalError("ARS_INIT", "adaptive rejection sampling needs initial points");
  for (double x : init_points) {
    if (!(x >= target_.lower && x <= target_.upper) || !std::isfinite(x)) {
      throw NumericalError("ARS_INIT", "initial point " + std::to_string(x) + " outside the support");
    }
    const LogDensityPoint p = target_.eval(x);
    if (!usable(p)) continue;
    insert(x, p);
  }
  if (xs_.empty()) throw NumericalError("ARS_INIT", "log-density is not finite at any initial point");
  if (target_.lower == kNegInf && !(ds_.front() > 0.0)) {
    throw NumericalError("ARS_INIT", "unbounded below: leftmost initial point needs a positive derivative");
  }
  if (target_.upper == kInf && !(ds_.back() < 0.0)) {
    throw NumericalError("ARS_INIT", "unbounded above: rightmost initial point needs a negative derivative");
  }
  rebuild();
}

void AdaptiveRejectionSampler::insert(double x, const LogDensityPoint& point) {
  const auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
  const std::size_t pos = static_cast<std::size_t>(it - xs_.begin());
  if (it != xs_.end() && *it == x) return;
  xs_.insert(xs_.begin() + pos, x);
  hs_.insert(hs_.begin() + pos, point.value);
  ds_.insert(ds_.begin() + pos, point.derivative);
  for (std::size_t i = 1; i < ds_.size(); ++i) {
    const double tol = 1e-8 * (std::fabs(ds_[i]) + std::fabs(ds_[i - 1])) + 1e-300;
    if (ds_[i] > ds_[i - 1] + tol) {
      throw NumericalError("ARS_NOT_LOG_CONCAVE",
                           "log-density derivative increases between " + std::to_string(xs_[i - 1]) +
                               " and " + std::to_string(xs_[i]));
    }
  }
}

void AdaptiveRejectionSampler::rebuild() {
  const std::size_t K = xs_.size();
  z_.assign(K + 1, 0.0);
  z_[0] = target_.lower;
  z_[K] = target_.upper;
  for (std::size_t i = 0; i + 1 < K; ++i) {
    const double dd = ds_[i] - ds_[i + 1];
    double z;
    if (dd > 1e-12 * (std::fabs(ds_[i]) + std::fabs(ds_[i + 1])) && dd > 0.0) {
      z = (hs_[i + 1] - hs_[i] - xs_[i + 1] * ds_[i + 1] + xs_[i] * ds_[i]) / dd;
      if (!std::isfinite(z)) z = 0.5 * (xs_[i] + xs_[i + 1]);
    } else {
      z = 0.5 * (xs_[i] + xs_[i + 1]);
    }
    z_[i + 1] = std::clamp(z, xs_[i], xs_[i + 1]);
  }
  log_area_.assign(K, kNegInf);
  double hi = kNegInf;
  for (std::size_t i = 0; i < K; ++i) {
    log_area_[i] = segment_log_area(hs_[i], ds_[i], xs_[i], z_[i], z_[i + 1]);
    hi = std::max(hi, log_area_[i]);
  }
  if (!std::isfinite(hi)) throw NumericalError("ARS_ENVELOPE", "envelope has no finite mass");
  cum_prob_.assign(K, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    acc += std::exp(log_area_[i] - hi);
    cum_prob_[i] = acc;
  }
  for (double& c : cum_prob_) c /= acc;
}

std::size_t AdaptiveRejectionSampler::segment_of(double x) const {
  const auto it = std::upper_bound(z_.begin() + 1, z_.end() - 1, x);
  return static_cast<std::size_t>(it - (z_.begin() + 1));
}

double AdaptiveRejectionSampler::upper_hull(double x) const {
  const std::size_t i = segment_of(x);
  return hs_[i] + ds_[i] * (x - xs_[i]);
}

double AdaptiveRejectionSampler::lower_hull(double x) const {
  if (xs_.size() < 2 || x < xs_.front() || x > xs_.back()) return kNegInf;
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs_.begin());
  if (i == xs_.size()) i = xs_.size() - 1;
  const std::size_t lo = i - 1;
  const double w = (x - xs_[lo]) / (xs_[i] - xs_[lo]);
  return (1.0 - w) * hs_[lo] + w * hs_[i];
}

double AdaptiveRejectionSampler::draw(Rng& rng) {
  for (int iter = 0; iter < max_refinements_; ++iter) {
    const double pick = uniform_open(rng);
    const std::size_t seg =
        std::min<std::size_t>(static_cast<std::size_t>(std::lower_bound(cum_prob_.begin(), cum_prob_.end(), pick) -
                                                       cum_prob_.begin()),
                              xs_.size() - 1);
    const double x = segment_sample(ds_[seg], xs_[seg], z_[seg], z_[seg + 1], uniform_open(rng));
    if (!(x > target_.lower && x < target_.upper)) continue;
    const double log_w = std::log(uniform_open(rng));
    const double u = hs_[seg] + ds_[seg] * (x - xs_[seg]);
    if (log_w <= lower_hull(x) - u) return x;
    const LogDensityPoint p = target_.eval(x);
    if (!usable(p)) continue;
    if (p.value > u + 1e-8 * (1.0 + std::fabs(u))) {
      throw NumericalError("ARS_NOT_LOG_CONCAVE",
                           "log-density exceeds its tangent envelope at " + std::to_string(x));
    }
    const bool accept = log_w <= p.value - u;
    if (xs_.size() < static_cast<std::size_t>(kMaxAbscissae)) {
      insert(x, p);
      rebuild();
    }
    if (accept) return x;
  }
  throw NumericalError("ARS_REFINEMENT_CAP", "adaptive rejection sampling exceeded " +
                                                 std::to_string(max_refinements_) + " refinements");
}

double ars_sample(const LogConcaveTarget& target, std::span<const double> init_points, Rng& rng) {
  AdaptiveRejectionSampler sampler(target, init_points);
  return sampler.draw(rng);
}

std::vector<double> ars_initial_points(const LogConcaveTarget& target, double start) {
  const double lower = target.lower;
  const double upper = target.upper;
  if (!(start > lower && start < upper)) throw NumericalError("ARS_INIT", "start point outside the support");

  double scale = std::max(0.5 * std::fabs(start), 1e-3);
  auto move_right = [&](double x) {
    const double step = std::isfinite(upper) ? std::min(scale, 0.5 * (upper - x)) : scale;
    scale *= 2.0;
    return x + step;
  };
  auto move_left = [&](double x) {
    const double step = std::isfinite(lower) ? std::min(scale, 0.5 * (x - lower)) : scale;
    scale *= 2.0;
    return x - step;
  };

  LogDensityPoint p0 = target.eval(start);
  if (!usable(p0)) throw NumericalError("ARS_INIT", "log-density not finite at start point");

  // Bracket the mode: a has derivative > 0, b has derivative < 0.
  double a = start, b = start;
  LogDensityPoint pa = p0, pb = p0;
  bool bounded_mode = false;
  constexpr int kMaxSteps = 200;
  if (p0.derivative > 0.0) {
    double x = start;
    for (int s = 0;; ++s) {
      if (s == kMaxSteps) throw NumericalError("ARS_INIT", "could not bracket the mode from below");
      double next = move_right(x);
      LogDensityPoint pn = target.eval(next);
      while (!usable(pn) && next - x > 1e-14 * (1.0 + std::fabs(x))) {
        next = 0.5 * (x + next);
        pn = target.eval(next);
      }
      if (!usable(pn) || next == x) {
        bounded_mode = true;
        break;
      }
      if (pn.derivative <= 0.0) {
        b = next;
        pb = pn;
        break;
      }
      a = x = next;
      pa = pn;
      if (std::isfinite(upper) && upper - x < 1e-12 * (1.0 + std::fabs(upper))) {
        bounded_mode = true;
        break;
      }
    }
  } else if (p0.derivative < 0.0) {
    double x = start;
    for (int s = 0;; ++s) {
      if (s == kMaxSteps) throw NumericalError("ARS_INIT", "could not bracket the mode from above");
      double next = move_left(x);
      LogDensityPoint pn = target.eval(next);
      while (!usable(pn) && x - next > 1e-14 * (1.0 + std::fabs(x))) {
        next = 0.5 * (x + next);
        pn = target.eval(next);
      }
      if (!usable(pn) || next == x) {
        bounded_mode = true;
        break;
      }
      if (pn.derivative >= 0.0) {
        a = next;
        pa = pn;
        break;
      }
      b = x = next;
      pb = pn;
      if (std::isfinite(lower) && x - lower < 1e-12 * (1.0 + std::fabs(lower))) {
        bounded_mode = true;
        break;
      }
    }
  }

  if (bounded_mode) {
    // Monotone up to a finite bound: points near the bound already suffice.
    std::vector<double> pts{a, b};
    if (a == b) pts.pop_back();
    return pts;
  }

  // Shrink the bracket to estimate the mode and the local curvature.
  for (int s = 0; s < 12 && b > a; ++s) {
    const double mid = 0.5 * (a + b);
    const LogDensityPoint pm = target.eval(mid);
    if (!usable(pm)) break;
    if (pm.derivative > 0.0) {
      a = mid;
      pa = pm;
    } else {
      b = mid;
      pb = pm;
    }
  }
  const double mode = 0.5 * (a + b);
  double sd = b - a;
  if (b > a) {
    const double curvature = (pb.derivative - pa.derivative) / (b - a);
    if (curvature < 0.0 && std::isfinite(curvature)) sd = 1.0 / std::sqrt(-curvature);
  }
  if (!(sd > 0.0)) sd = std::max(1e-6, 1e-6 * std::fabs(mode));

  double left = mode - sd;
  double right = mode + sd;
  if (!(left > lower)) left = lower + 0.5 * (mode - lower);
  if (!(right < upper)) right = upper - 0.5 * (upper - mode);

  std::vector<double> pts;
  const LogDensityPoint pl = target.eval(left);
  const LogDensityPoint pr = target.eval(right);
  if (usable(pl) && pl.derivative > 0.0) {
    pts.push_back(left);
  } else if (pa.derivative > 0.0) {
    pts.push_back(a);
  }
  if (usable(pr) && pr.derivative < 0.0) {
    pts.push_back(right);
  } else if (pb.derivative < 0.0) {
    pts.push_back(b);
  }
  if (pts.size() < 2 || std::isfinite(lower) || std::isfinite(upper)) pts.push_back(mode);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

bool mh_accept(double log_target_delta, double log_hastings, Rng& rng) {
  const double log_ratio = log_target_delta + log_hastings;
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(uniform_open(rng)) < log_ratio;
}

TailProposal choose_tail_proposal(double shape, double bound, bool bound_is_lower) {
  if (bound_is_lower) {
    // Exponential proposal shifted to the bound: target/proposal ~ y^(shape-1).
    const double exponential = std::pow((bound + 1.0) / bound, shape - 1.0);
    const double gamma = std::exp(log_gamma_q(shape, bound));
    return exponential >= gamma ? TailProposal::Exponential : TailProposal::Gamma;
  }
  // Power proposal y^(shape-1) on (0, bound): target/proposal ~ exp(-y).
  const double power = std::exp(-0.5 * bound);
  const double gamma = std::exp(log_gamma_p(shape, bound));
  return power >= gamma ? TailProposal::Power : TailProposal::Gamma;
}

double log_truncated_gamma_above(double shape, double lower, Rng& rng, int mh_refreshes) {
  if (!(shape > 0.0)) throw NumericalError("BAD_PARAM", "truncated gamma shape must be positive");
  if (!(lower >= 0.0) || !std::isfinite(lower)) throw NumericalError("BAD_PARAM", "truncation bound must be finite and >= 0");
  if (lower == 0.0) return log_gamma_variate(shape, rng);

  if (shape >= 1.0) {
    const double a1 = shape - 1.0;
    LogConcaveTarget target{[a1](double y) {
                              return LogDensityPoint{a1 == 0.0 ? -y : a1 * std::log(y) - y,
                                                     a1 == 0.0 ? -1.0 : a1 / y - 1.0};
                            },
                            lower, kInf};
    std::vector<double> pts;
    if (lower >= a1) {
      pts = {lower, lower + 1.0};
    } else {
      const double spread = std::max(std::sqrt(a1), 1.0);
      pts = {std::max(a1 - spread, 0.5 * (lower + a1)), a1 + spread};
    }
    return std::log(ars_sample(target, pts, rng));
  }

  // shape < 1: independence Metropolis-Hastings on (lower, inf).
  const TailProposal proposal = choose_tail_proposal(shape, lower, true);
  auto propose = [&]() -> double {
    if (proposal == TailProposal::Exponential) return lower - std::log(uniform_open(rng));
    return std::exp(log_gamma_variate(shape, rng));
  };
  // log(target / proposal) up to a constant; -inf outside the support.
  auto log_weight = [&](double y) -> double {
    if (!(y > lower)) return kNegInf;
    return proposal == TailProposal::Exponential ? (shape - 1.0) * std::log(y) : 0.0;
  };
  double y = proposal == TailProposal::Exponential ? propose() : kNegInf;
  for (int attempt = 0; !(y > lower); ++attempt) {
    if (attempt > 1000000) throw NumericalError("TRUNCATED_GAMMA", "no proposal landed in the support");
    y = propose();
  }
  double w = log_weight(y);
  for (int step = 0; step < mh_refreshes; ++step) {
    const double candidate = propose();
    const double wc = log_weight(candidate);
    if (mh_accept(wc - w, 0.0, rng)) {
      y = candidate;
      w = wc;
    }
  }
  return std::log(y);
}

double log_truncated_gamma_below(double shape, double upper, Rng& rng, int mh_refreshes) {
  if (!(shape > 0.0)) throw NumericalError("BAD_PARAM", "truncated gamma shape must be positive");
  if (!(upper > 0.0)) throw NumericalError("BAD_PARAM", "upper truncation bound must be positive");
  if (upper == kInf) return log_gamma_variate(shape, rng);
  const double log_upper = std::log(upper);

  // Work with w = y / upper on (0, 1): density ~ w^(shape-1) exp(-upper w).
  if (shape >= 1.0) {
    const double a1 = shape - 1.0;
    LogConcaveTarget target{[a1, upper](double w) {
                              return LogDensityPoint{a1 == 0.0 ? -upper * w : a1 * std::log(w) - upper * w,
                                                     a1 == 0.0 ? -upper : a1 / w - upper};
                            },
                            0.0, 1.0};
    std::vector<double> pts;
    const double mode = a1 / upper;
    if (a1 == 0.0) {
      pts = {1.0 / 3.0, 2.0 / 3.0};
    } else if (mode >= 1.0) {
      pts = {0.5, 1.0};
    } else {
      const double spread = std::max(std::sqrt(a1), 1.0) / upper;
      pts = {std::max(mode - spread, 0.5 * mode), std::min(mode + spread, 0.5 * (mode + 1.0))};
    }
    return log_upper + std::log(ars_sample(target, pts, rng));
  }

  const TailProposal proposal = choose_tail_proposal(shape, upper, false);
  // Proposals are returned as log w.
  auto propose = [&]() -> double {
    if (proposal == TailProposal::Power) return std::log(uniform_open(rng)) / shape;
    return log_gamma_variate(shape, rng) - log_upper;
  };
  auto log_weight = [&](double log_w) -> double {
    if (!(log_w < 0.0)) return kNegInf;
    return proposal == TailProposal::Power ? -upper * std::exp(log_w) : 0.0;
  };
  double lw = proposal == TailProposal::Power ? propose() : 0.0;
  for (int attempt = 0; !(lw < 0.0); ++attempt) {
    if (attempt > 1000000) throw NumericalError("TRUNCATED_GAMMA", "no proposal landed in the support");
    lw = propose();
  }
  double weight = log_weight(lw);
  for (int step = 0; step < mh_refreshes; ++step) {
    const double candidate = propose();
    const double wc = log_weight(candidate);
    if (mh_accept(wc - weight, 0.0, rng)) {
      lw = candidate;
      weight = wc;
    }
  }
  return log_upper + lw;
}

double truncated_gamma_sample(double shape, double rate, double lower, Rng& rng, int mh_refreshes) {
  if (!(rate > 0.0)) throw NumericalError("BAD_PARAM", "truncated gamma rate must be positive");
  return std::exp(log_truncated_gamma_above(shape, rate * lower, rng, mh_refreshes)) / rate;
}

double truncated_gamma_sample_below(double shape, double rate, double upper, Rng& rng, int mh_refreshes) {
  if (!(rate > 0.0)) throw NumericalError("BAD_PARAM", "truncated gamma rate must be positive");
  return std::exp(log_truncated_gamma_below(shape, rate * upper, rng, mh_refreshes)) / rate;
}

Eigen::MatrixXd random_rotation(int dim, Rng& rng) {
  if (dim < 1) throw NumericalError("BAD_PARAM", "rotation dimension must be >= 1");
  Eigen::MatrixXd g(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) g(r, c) = standard_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < dim; ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  if (q.determinant() < 0.0) q.col(0) *= -1.0;
  return q;
}

Eigen::MatrixXd cholesky_upper(const Eigen::MatrixXd& gram) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n) throw NumericalError("NOT_SQUARE", "Cholesky input must be square");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = gram(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= c(k, j) * c(k, j);
    if (!(pivot > 0.0)) {
      throw NumericalError("NOT_POSITIVE_DEFINITE", "Cholesky failed at pivot " + std::to_string(j) +
                                                        " (value " + std::to_string(pivot) + ")");
    }
    const double cjj = std::sqrt(pivot);
    c(j, j) = cjj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = 0.5 * (gram(j, i) + gram(i, j));
      for (Eigen::Index k = 0; k < j; ++k) s -= c(k, j) * c(k, i);
      c(j, i) = s / cjj;
    }
  }
  return c;
}

MultivariateStudent::MultivariateStudent(Eigen::VectorXd mean, const Eigen::MatrixXd& scale, double dof)
    : mean_(std::move(mean)), chol_(cholesky_upper(scale)), dof_(dof) {
  if (!(dof > 0.0)) throw NumericalError("BAD_PARAM", "Student degrees of freedom must be positive");
  if (scale.rows() != mean_.size()) throw NumericalError("DIMENSION_MISMATCH", "Student scale/mean size mismatch");
  const double d = static_cast<double>(mean_.size());
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  log_norm_ = log_gamma_fn(0.5 * (dof_ + d)) - log_gamma_fn(0.5 * dof_) - 0.5 * d * std::log(dof_ * M_PI) -
              0.5 * log_det;
}

Eigen::VectorXd MultivariateStudent::sample(Rng& rng) const {
  const Eigen::Index d = mean_.size();
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = standard_normal(rng);
  const double chi2 = 2.0 * std::exp(log_gamma_variate(0.5 * dof_, rng));
  return mean_ + chol_.transpose() * z * std::sqrt(dof_ / chi2);
}

double MultivariateStudent::log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = chol_.transpose().triangularView<Eigen::Lower>().solve(x - mean_);
  const double d = static_cast<double>(mean_.size());
  return log_norm_ - 0.5 * (dof_ + d) * std::log1p(y.squaredNorm() / dof_);
}

StudentDraw student_proposal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& scale, double dof, Rng& rng) {
  MultivariateStudent dist(mean, scale, dof);
  Eigen::VectorXd value = dist.sample(rng);
  return {std::move(value), std::move(dist)};
}

}  // namespace gpm
