#include "gpm/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "gpm/error.hpp"
#include "gpm/samplers.hpp"
#include "gpm/simd/kernels.hpp"

namespace gpm {
namespace {

// Finite latent times are kept inside the range where x and log x both
// survive a round trip through double arithmetic.
constexpr double kMaxLogTime = 690.0;
constexpr int kLatentRefreshes = 2;
// Proposal scale for the beta step is this factor times the inverse of the
// regularized negative Hessian.
constexpr double kBetaScaleFactor = 0.5;
constexpr double kBetaStudentDof = 2.0;

std::vector<double> linear_predictors(const Dataset& data, const std::vector<double>& beta) {
  std::vector<double> l(data.size(), 0.0);
  for (std::size_t v = 0; v < beta.size(); ++v) simd::axpy(beta[v], data.column(v), l);
  return l;
}

double latent_log_prob(const ExtendedTime& x, const Activation& a, const ModeShape& s) {
  return x.is_finite() ? mode_log_density(x.value(), a, s) : a.log_not_p;
}

std::size_t draw_categorical(std::span<const double> log_weights, Rng& rng) {
  double hi = kNegInf;
  for (double w : log_weights) hi = std::max(hi, w);
  if (!std::isfinite(hi)) {
    return std::uniform_int_distribution<std::size_t>(0, log_weights.size() - 1)(rng);
  }
  double total = 0.0;
  std::vector<double> cum(log_weights.size());
  for (std::size_t j = 0; j < log_weights.size(); ++j) {
    total += std::exp(log_weights[j] - hi);
    cum[j] = total;
  }
  const double u = uniform_open(rng) * total;
  for (std::size_t j = 0; j < cum.size(); ++j) {
    if (u < cum[j]) return j;
  }
  return cum.size() - 1;
}

// Accepts an independence move whose log importance weights are given;
// an old state of zero model probability (weight +inf) is always left.
bool accept_weights(double w_new, double w_old, Rng& rng) {
  if (w_old == kInf) return true;
  return mh_accept(w_new - w_old, 0.0, rng);
}

std::vector<double> finite_log_times(const ModelState& state, std::size_t j) {
  std::vector<double> out;
  out.reserve(state.latent[j].size());
  for (const ExtendedTime& x : state.latent[j]) {
    if (x.is_finite()) out.push_back(std::log(x.value()));
  }
  return out;
}

std::vector<int> unused_modes(const ModelState& state) {
  std::vector<char> used(state.J(), 0);
  for (int c : state.cause) {
    if (c > 0) used[static_cast<std::size_t>(c - 1)] = 1;
  }
  std::vector<int> out;
  for (std::size_t j = 0; j < used.size(); ++j) {
    if (!used[j]) out.push_back(static_cast<int>(j));
  }
  return out;
}

}  // namespace

void AnnealSchedule::validate() const {
  if (n_anneal < 1) throw UsageError("BAD_SCHEDULE", "n_anneal must be at least 1");
  if (n_total < n_anneal) throw UsageError("BAD_SCHEDULE", "n_total must be at least n_anneal");
  if (n_discard < 0 || n_discard >= n_total) throw UsageError("BAD_SCHEDULE", "n_discard must lie in [0, n_total)");
  if (!std::isfinite(logit_lo) || !std::isfinite(logit_hi) || !(logit_lo < logit_hi)) {
    throw UsageError("BAD_SCHEDULE", "logit endpoints must be finite with logit_lo < logit_hi");
  }
}

double coolness_at(int n, const AnnealSchedule& schedule) {
  if (n < 1 || n > schedule.n_total) {
    throw UsageError("BAD_SAMPLE_INDEX", "sample index " + std::to_string(n) + " outside [1, " +
                                             std::to_string(schedule.n_total) + "]");
  }
  if (n > schedule.n_anneal) return 1.0;
  const double frac = schedule.n_anneal == 1 ? 1.0 : static_cast<double>(n - 1) / (schedule.n_anneal - 1);
  const double logit = schedule.logit_lo + frac * (schedule.logit_hi - schedule.logit_lo);
  return 1.0 / (1.0 + std::exp(-logit));
}

double BaseDistribution::log_density(double x) const {
  const double u = x / cauchy_width;
  return std::log1p(-weight_infinite) + std::log(2.0 / (std::numbers::pi * cauchy_width)) - std::log1p(u * u);
}

double tempering_log_weight(const ExtendedTime& x, const Activation& a, const ModeShape& s, double coolness,
                            const BaseDistribution& base) {
  if (coolness >= 1.0) return 0.0;
  const double lp = latent_log_prob(x, a, s);
  if (lp == kNegInf) return kInf;
  return (1.0 - coolness) * (base.log_prob(x) - lp);
}

double draw_finite_beyond(double tau, const ModeShape& s, Rng& rng) {
  const double lz0 = log_gamma_argument(tau, s);
  double lz;
  if (s.k > 0.0) {
    if (lz0 > 700.0) {
      // Deep in the upper tail the truncated Gamma is an exponential excess.
      lz = lz0 + std::log1p(-std::log(uniform_open(rng)) * std::exp(-lz0));
    } else {
      lz = log_truncated_gamma_above(s.m, std::exp(lz0), rng);
    }
  } else {
    if (lz0 < -700.0) {
      lz = lz0 + std::log(uniform_open(rng)) / s.m;
    } else if (lz0 > 700.0) {
      lz = log_gamma_variate(s.m, rng);
    } else {
      lz = log_truncated_gamma_below(s.m, std::exp(lz0), rng);
    }
  }
  double lx = (lz - std::log(s.m)) / s.k - std::log(s.r);
  lx = std::clamp(lx, -kMaxLogTime, kMaxLogTime);
  double x = std::exp(lx);
  if (!(x > tau)) x = std::nextafter(tau, kInf);
  return x;
}

ExtendedTime draw_latent_beyond(double tau, const Activation& a, const ModeShape& s, Rng& rng,
                                double* log_survival) {
  const double log_tail = a.log_p == kNegInf ? kNegInf : finite_log_tail(tau, s);
  const double log_s = log_add_exp(a.log_not_p, a.log_p + log_tail);
  if (log_survival) *log_survival = log_s;
  const double p_infinite = std::exp(a.log_not_p - log_s);
  if (uniform_open(rng) < p_infinite) return ExtendedTime::infinite();
  return ExtendedTime::finite(draw_finite_beyond(tau, s, rng));
}

ModelState init_chain(const Dataset& data, const Prior& prior, Rng& rng) {
  ModelState state = prior.sample_state(data.n_covariates(), rng);
  const std::size_t J = state.J();
  const std::size_t N = data.size();
  state.cause.assign(N, 0);
  state.latent.assign(J, std::vector<ExtendedTime>(N, ExtendedTime::infinite()));
  std::vector<std::vector<double>> L(J);
  for (std::size_t j = 0; j < J; ++j) L[j] = linear_predictors(data, state.modes[j].beta);

  std::vector<std::size_t> able;
  for (std::size_t i = 0; i < N; ++i) {
    const double tau = data.time(i);
    int cause = 0;
    if (!data.censored(i)) {
      able.clear();
      for (std::size_t j = 0; j < J; ++j) {
        const double lf = mode_log_density(tau, Activation::from_linear(L[j][i]), shape_of(state.modes[j]));
        if (lf > kNegInf) able.push_back(j);
      }
      std::size_t pick;
      if (able.empty()) {
        pick = std::uniform_int_distribution<std::size_t>(0, J - 1)(rng);
      } else {
        pick = able[std::uniform_int_distribution<std::size_t>(0, able.size() - 1)(rng)];
      }
      cause = static_cast<int>(pick) + 1;
      state.latent[pick][i] = ExtendedTime::finite(tau);
    }
    state.cause[i] = cause;
    for (std::size_t j = 0; j < J; ++j) {
      if (static_cast<int>(j) + 1 == cause) continue;
      state.latent[j][i] =
          draw_latent_beyond(tau, Activation::from_linear(L[j][i]), shape_of(state.modes[j]), rng);
    }
  }
  return state;
}

void resample_k(ModelState& state, const StepContext& ctx, Rng& rng) {
  const Hyperparams& h = ctx.prior.hyper();
  const double t = ctx.coolness;
  for (std::size_t j = 0; j < state.J(); ++j) {
    ModeParams& mode = state.modes[j];
    std::vector<double> s = finite_log_times(state, j);
    const double log_r = std::log(mode.r);
    double sum_s = 0.0;
    for (double& v : s) {
      v += log_r;
      sum_s += v;
    }
    const double n = static_cast<double>(s.size());
    double prior_lin = 0.0;
    for (std::size_t q = 0; q < h.b_k.size(); ++q) prior_lin += h.c_k[q] * std::log(h.b_k[q]);
    const double A = t * mode.m * sum_s + prior_lin;
    const double power = t * n + h.a_k;
    const double tm = t * mode.m;

    auto eval = [&](double kappa, double sign) {
      const simd::PowerSums ps = simd::power_sums(s, sign * kappa);
      double value = power * std::log(kappa) + sign * kappa * A - tm * ps.sum_exp;
      double deriv = power / kappa + sign * A - tm * sign * ps.sum_s_exp;
      for (std::size_t q = 0; q < h.b_k.size(); ++q) {
        const double lb = std::log(h.b_k[q]);
        const double e = std::exp(sign * kappa * lb);
        value -= h.c_k[q] * e;
        deriv -= h.c_k[q] * sign * lb * e;
      }
      return LogDensityPoint{value, deriv};
    };

    auto flip_sign = [&]() {
      const double kappa = std::fabs(mode.k);
      const double sign = mode.k > 0.0 ? 1.0 : -1.0;
      const double delta = eval(kappa, -sign).value - eval(kappa, sign).value;
      const bool accept = mh_accept(delta, 0.0, rng);
      if (ctx.stats) ctx.stats->k_sign.record(accept);
      if (accept) mode.k = -mode.k;
    };

    flip_sign();
    const double sign = mode.k > 0.0 ? 1.0 : -1.0;
    LogConcaveTarget target{[&eval, sign](double kappa) { return eval(kappa, sign); }, 0.0, kInf};
    const std::vector<double> init = ars_initial_points(target, std::fabs(mode.k));
    mode.k = sign * ars_sample(target, init, rng);
    flip_sign();
  }
}

void resample_m(ModelState& state, const StepContext& ctx, Rng& rng) {
  const Hyperparams& h = ctx.prior.hyper();
  const double t = ctx.coolness;
  for (std::size_t j = 0; j < state.J(); ++j) {
    ModeParams& mode = state.modes[j];
    std::vector<double> s = finite_log_times(state, j);
    const double log_r = std::log(mode.r);
    double sum_s = 0.0;
    for (double& v : s) {
      v += log_r;
      sum_s += v;
    }
    const double n = static_cast<double>(s.size());
    const simd::PowerSums ps = simd::power_sums(s, mode.k);
    const double lin = t * (mode.k * sum_s - ps.sum_exp) - h.a_m - h.b_m;
    const double weight = t * n + h.b_m;
    LogConcaveTarget target{[weight, lin](double m) {
                              return LogDensityPoint{weight * (m * std::log(m) - log_gamma_fn(m)) + m * lin,
                                                     weight * (std::log(m) + 1.0 - digamma(m)) + lin};
                            },
                            0.0, kInf};
    const std::vector<double> init = ars_initial_points(target, mode.m);
    mode.m = ars_sample(target, init, rng);
  }
}

void resample_r(ModelState& state, const StepContext& ctx, Rng& rng) {
  const Hyperparams& h = ctx.prior.hyper();
  const double t = ctx.coolness;
  for (std::size_t j = 0; j < state.J(); ++j) {
    ModeParams& mode = state.modes[j];
    std::vector<double> lx = finite_log_times(state, j);
    if (lx.empty()) {
      mode.r = ctx.prior.sample_r(rng);
      continue;
    }
    for (double& v : lx) v *= mode.k;
    const double n = static_cast<double>(lx.size());
    const double log_rate = std::log(t * mode.m) + log_sum_exp(lx);
    const double log_y = log_gamma_variate(t * n * mode.m + 1.0, rng) - log_rate;
    const double log_r_new = log_y / mode.k;
    const double r_new = std::exp(log_r_new);
    bool accept = false;
    if (r_new > 0.0 && std::isfinite(r_new)) {
      auto log_w = [&](double log_r, double r) { return (h.m_r - mode.k) * log_r - h.r_r * r; };
      accept = mh_accept(log_w(log_r_new, r_new) - log_w(std::log(mode.r), mode.r), 0.0, rng);
    }
    if (ctx.stats) ctx.stats->r.record(accept);
    if (accept) mode.r = r_new;
  }
}

void resample_latents(ModelState& state, const StepContext& ctx, Rng& rng) {
  const Dataset& data = ctx.data;
  const std::size_t J = state.J();
  const std::size_t N = data.size();
  const double t = ctx.coolness;
  const bool exact = t >= 1.0;

  std::vector<std::vector<double>> L(J);
  std::vector<ModeShape> shapes(J);
  for (std::size_t j = 0; j < J; ++j) {
    L[j] = linear_predictors(data, state.modes[j].beta);
    shapes[j] = shape_of(state.modes[j]);
  }
  std::vector<Activation> act(J);
  std::vector<double> cause_lw(J);
  std::vector<ExtendedTime> proposal(J, ExtendedTime::infinite());

  auto weight_of = [&](std::size_t j, const ExtendedTime& x) {
    return tempering_log_weight(x, act[j], shapes[j], t, ctx.base);
  };
  // Independence refresh of one non-cause latent against its t = 1 conditional.
  auto refresh = [&](std::size_t j, std::size_t i, double tau) {
    for (int rep = 0; rep < kLatentRefreshes; ++rep) {
      const ExtendedTime x = draw_latent_beyond(tau, act[j], shapes[j], rng);
      const bool accept = accept_weights(weight_of(j, x), weight_of(j, state.latent[j][i]), rng);
      if (ctx.stats) ctx.stats->latent_refresh.record(accept);
      if (accept) state.latent[j][i] = x;
    }
  };

  for (std::size_t i = 0; i < N; ++i) {
    const double tau = data.time(i);
    for (std::size_t j = 0; j < J; ++j) act[j] = Activation::from_linear(L[j][i]);

    if (data.censored(i)) {
      for (std::size_t j = 0; j < J; ++j) {
        if (exact) {
          state.latent[j][i] = draw_latent_beyond(tau, act[j], shapes[j], rng);
        } else {
          refresh(j, i, tau);
        }
      }
      continue;
    }

    for (std::size_t j = 0; j < J; ++j) {
      cause_lw[j] = mode_log_density(tau, act[j], shapes[j]) - mode_log_survival(tau, act[j], shapes[j]);
    }
    const std::size_t c = draw_categorical(cause_lw, rng);
    for (std::size_t j = 0; j < J; ++j) {
      proposal[j] = j == c ? ExtendedTime::finite(tau) : draw_latent_beyond(tau, act[j], shapes[j], rng);
    }
    bool accept = true;
    if (!exact) {
      double w_new = 0.0, w_old = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        w_new += weight_of(j, proposal[j]);
        w_old += weight_of(j, state.latent[j][i]);
      }
      if (std::isnan(w_old)) w_old = kInf;
      accept = accept_weights(w_new, w_old, rng);
      if (ctx.stats) ctx.stats->latent_joint.record(accept);
    }
    if (accept) {
      state.cause[i] = static_cast<int>(c) + 1;
      for (std::size_t j = 0; j < J; ++j) state.latent[j][i] = proposal[j];
    }
    if (!exact) {
      const std::size_t cause = static_cast<std::size_t>(state.cause[i] - 1);
      for (std::size_t j = 0; j < J; ++j) {
        if (j != cause) refresh(j, i, tau);
      }
    }
  }
}

void resample_J(ModelState& state, const StepContext& ctx, Rng& rng) {
  const Dataset& data = ctx.data;
  const Prior& prior = ctx.prior;
  const std::size_t N = data.size();
  const int J = static_cast<int>(state.J());
  const double t = ctx.coolness;
  const double log_pJ = prior.log_prior_J(J);
  const bool birth = uniform_open(rng) < 0.5;

  if (birth) {
    const double log_pJ1 = prior.log_prior_J(J + 1);
    if (log_pJ1 == kNegInf) {
      if (ctx.stats) ctx.stats->birth.record(false);
      return;
    }
    ModeParams fresh = prior.sample_mode(data.n_covariates(), rng);
    const std::vector<double> l = linear_predictors(data, fresh.beta);
    const ModeShape shape = shape_of(fresh);
    std::vector<ExtendedTime> column(N, ExtendedTime::infinite());
    double extension = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const Activation a = Activation::from_linear(l[i]);
      double log_s = 0.0;
      column[i] = draw_latent_beyond(data.time(i), a, shape, rng, &log_s);
      extension += log_s + tempering_log_weight(column[i], a, shape, t, ctx.base);
    }
    const int pos = std::uniform_int_distribution<int>(0, J)(rng);
    const double unused_after = static_cast<double>(unused_modes(state).size()) + 1.0;
    const double log_accept = log_pJ1 - log_pJ + std::log(J + 1.0) - std::log(unused_after) + extension;
    const bool accept = mh_accept(log_accept, 0.0, rng);
    if (ctx.stats) ctx.stats->birth.record(accept);
    if (!accept) return;
    state.modes.insert(state.modes.begin() + pos, std::move(fresh));
    state.latent.insert(state.latent.begin() + pos, std::move(column));
    for (int& c : state.cause) {
      if (c >= pos + 1) ++c;
    }
    return;
  }

  if (J == 1) {
    if (ctx.stats) ctx.stats->death.record(false);
    return;
  }
  const std::vector<int> unused = unused_modes(state);
  if (unused.empty()) {
    if (ctx.stats) ctx.stats->death.record(false);
    return;
  }
  const int d = unused[std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng)];
  const std::size_t dj = static_cast<std::size_t>(d);
  const std::vector<double> l = linear_predictors(data, state.modes[dj].beta);
  const ModeShape shape = shape_of(state.modes[dj]);
  double extension = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const Activation a = Activation::from_linear(l[i]);
    extension += mode_log_survival(data.time(i), a, shape) +
                 tempering_log_weight(state.latent[dj][i], a, shape, t, ctx.base);
  }
  const double log_accept = prior.log_prior_J(J - 1) - log_pJ + std::log(static_cast<double>(unused.size())) -
                            std::log(static_cast<double>(J)) - extension;
  const bool accept = mh_accept(log_accept, 0.0, rng);
  if (ctx.stats) ctx.stats->death.record(accept);
  if (!accept) return;
  state.modes.erase(state.modes.begin() + d);
  state.latent.erase(state.latent.begin() + d);
  for (int& c : state.cause) {
    if (c > d + 1) --c;
  }
}

namespace {

struct BetaPoint {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd precision;  // regularized negative Hessian
};

BetaPoint beta_evaluate(const Eigen::MatrixXd& Z, const Eigen::VectorXd& w, const Eigen::VectorXd& phi,
                        double eps) {
  const Eigen::VectorXd l = Z * phi;
  Eigen::VectorXd sig(l.size());
  BetaPoint out;
  out.value = -simd::softplus_sigmoid(std::span<const double>(l.data(), static_cast<std::size_t>(l.size())),
                                      std::span<const double>(w.data(), static_cast<std::size_t>(w.size())),
                                      std::span<double>(sig.data(), static_cast<std::size_t>(sig.size())));
  out.grad = -(Z.transpose() * w.cwiseProduct(sig));
  const Eigen::VectorXd curv = w.cwiseProduct(sig.cwiseProduct((1.0 - sig.array()).matrix()));
  out.precision = Z.transpose() * curv.asDiagonal() * Z;
  out.precision.diagonal().array() += eps;
  return out;
}

// Halfway-to-Newton centre and Student scale at a point.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> beta_proposal_params(const Eigen::VectorXd& phi, const BetaPoint& pt) {
  Eigen::LLT<Eigen::MatrixXd> llt(pt.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("NOT_POSITIVE_DEFINITE", "regularized Hessian is not positive definite");
  const Eigen::Index d = phi.size();
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd scale = kBetaScaleFactor * cov;
  scale = 0.5 * (scale + scale.transpose());
  return {phi + 0.5 * llt.solve(pt.grad), scale};
}

}  // namespace

void resample_beta(ModelState& state, const StepContext& ctx, Rng& rng) {
  const Dataset& data = ctx.data;
  const std::size_t N = data.size();
  const std::size_t V = data.n_covariates();
  const double gamma = ctx.prior.hyper().gamma;
  const double t = ctx.coolness;
  const Eigen::Index G = static_cast<Eigen::Index>(N + 2 * V);
  const Eigen::Index D = static_cast<Eigen::Index>(V);

  for (std::size_t j = 0; j < state.J(); ++j) {
    ModeParams& mode = state.modes[j];
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(G, D);
    Eigen::VectorXd w(G);
    for (std::size_t v = 0; v < V; ++v) {
      const std::span<const double> col = data.column(v);
      for (std::size_t i = 0; i < N; ++i) {
        X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) =
            state.latent[j][i].is_finite() ? col[i] : -col[i];
      }
    }
    for (std::size_t i = 0; i < N; ++i) w(static_cast<Eigen::Index>(i)) = t;
    for (std::size_t v = 0; v < V; ++v) {
      const Eigen::Index row = static_cast<Eigen::Index>(N + 2 * v);
      X(row, static_cast<Eigen::Index>(v)) = gamma;
      X(row + 1, static_cast<Eigen::Index>(v)) = -gamma;
      w(row) = 1.0;
      w(row + 1) = 1.0;
    }

    const Eigen::MatrixXd C = cholesky_upper(X.transpose() * X);
    const Eigen::MatrixXd C_inv =
        C.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(D, D));
    const Eigen::MatrixXd Y = X * C_inv;
    const Eigen::MatrixXd Q = random_rotation(static_cast<int>(D), rng);
    const Eigen::MatrixXd Z = Y * Q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Y.transpose() * Y, Eigen::EigenvaluesOnly);
    const double sigma_max = std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
    const double eps = 1e-4 * sigma_max;

    const Eigen::Map<const Eigen::VectorXd> beta(mode.beta.data(), D);
    const Eigen::VectorXd phi = Q.transpose() * (C * beta);
    const BetaPoint here = beta_evaluate(Z, w, phi, eps);
    const auto [centre, scale] = beta_proposal_params(phi, here);
    const StudentDraw draw = student_proposal(centre, scale, kBetaStudentDof, rng);
    const BetaPoint there = beta_evaluate(Z, w, draw.value, eps);
    const auto [centre_back, scale_back] = beta_proposal_params(draw.value, there);
    const MultivariateStudent reverse(centre_back, scale_back, kBetaStudentDof);
    const double log_hastings = reverse.log_density(phi) - draw.distribution.log_density(draw.value);
    const bool accept = std::isfinite(there.value) && mh_accept(there.value - here.value, log_hastings, rng);
    if (ctx.stats) ctx.stats->beta.record(accept);
    if (!accept) continue;
    const Eigen::VectorXd beta_new = C_inv * (Q * draw.value);
    for (Eigen::Index v = 0; v < D; ++v) mode.beta[static_cast<std::size_t>(v)] = beta_new(v);
  }
}

void apply_step(Step step, ModelState& state, const StepContext& ctx, Rng& rng) {
  switch (step) {
    case Step::K:
      resample_k(state, ctx, rng);
      break;
    case Step::M:
      resample_m(state, ctx, rng);
      break;
    case Step::R:
      resample_r(state, ctx, rng);
      break;
    case Step::Latents:
      resample_latents(state, ctx, rng);
      break;
    case Step::J:
      resample_J(state, ctx, rng);
      break;
    case Step::Beta:
      resample_beta(state, ctx, rng);
      break;
  }
}

void sweep(ModelState& state, const StepContext& ctx, Rng& rng) {
  static constexpr Step kOrder[] = {Step::K, Step::M, Step::R, Step::Latents, Step::J, Step::Beta};
  for (Step s : kOrder) apply_step(s, state, ctx, rng);
  for (auto it = std::rbegin(kOrder); it != std::rend(kOrder); ++it) apply_step(*it, state, ctx, rng);
}

ChainResult run_chain(const Dataset& data, const Prior& prior, const AnnealSchedule& schedule, Rng& rng,
                      const Retention& retention) {
  schedule.validate();
  if (data.n_covariates() == 0) throw UsageError("BAD_COVARIATES", "dataset needs at least the constant column");
  ChainResult result;
  result.records.reserve(static_cast<std::size_t>(retention.keep_burn_in ? schedule.n_total : schedule.n_retained()));
  ModelState state = init_chain(data, prior, rng);
  StepContext ctx{data, prior, 1.0, &result.stats};
  for (int n = 1; n <= schedule.n_total; ++n) {
    ctx.coolness = coolness_at(n, schedule);
    try {
      sweep(state, ctx, rng);
      if (retention.debug_invariants) check_state_invariants(state, data);
    } catch (const Error& e) {
      throw Error(e.kind(), e.code(), "sample " + std::to_string(n) + ": " + e.what());
    }
    const bool burn_in = n <= schedule.n_discard;
    if (burn_in && !retention.keep_burn_in) continue;
    ChainRecord rec{n, ctx.coolness, burn_in, {}};
    rec.state.modes = state.modes;
    if (retention.keep_latents) {
      rec.state.cause = state.cause;
      rec.state.latent = state.latent;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

ChainResult run_chain(const Dataset& data, const Prior& prior, const AnnealSchedule& schedule,
                      std::uint64_t seed, const Retention& retention) {
  Rng rng(seed);
  return run_chain(data, prior, schedule, rng, retention);
}

int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<ChainResult> run_chains(const Dataset& data, const Prior& prior, const AnnealSchedule& schedule,
                                    std::span<const std::uint64_t> seeds, const Retention& retention,
                                    int n_threads) {
  const std::size_t n = seeds.size();
  std::vector<ChainResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(n_threads > 0 ? n_threads : default_thread_count()));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t c = next++; c < n; c = next++) {
      try {
        results[c] = run_chain(data, prior, schedule, seeds[c], retention);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<ModelState> retained_states(const ChainResult& chain) {
  std::vector<ModelState> out;
  for (const ChainRecord& rec : chain.records) {
    if (!rec.burn_in) out.push_back(rec.state);
  }
  return out;
}

}  // namespace gpm
