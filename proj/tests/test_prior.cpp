#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>

#include "gpm/error.hpp"
#include "gpm/prior.hpp"
#include "oracles.hpp"

using namespace gpm;

namespace {

double integrate_line(const std::function<double(double)>& f) {
  boost::math::quadrature::exp_sinh<double> e;
  return e.integrate(f, 0.0, kInf) + e.integrate([&](double x) { return f(-x); }, 0.0, kInf);
}

}  // namespace

TEST(PriorJ, GeometricLaw) {
  const Prior prior;
  EXPECT_NEAR(std::exp(prior.log_prior_J(1)), 0.2, 1e-15);
  EXPECT_NEAR(std::exp(prior.log_prior_J(2)), 0.16, 1e-15);
  EXPECT_NEAR(std::exp(prior.log_prior_J(5)), 0.2 * std::pow(0.8, 4), 1e-15);
  double total = 0.0;
  for (int J = 1; J < 400; ++J) total += std::exp(prior.log_prior_J(J));
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_THROW(prior.log_prior_J(0), Error);
  EXPECT_NEAR(log_prior_J(3, Hyperparams{}), prior.log_prior_J(3), 1e-15);
}

TEST(PriorJ, TruncatedLaw) {
  Hyperparams h;
  h.max_modes = 3;
  const Prior prior(h);
  const double z = 1.0 - std::pow(0.8, 3);
  EXPECT_NEAR(std::exp(prior.log_prior_J(1)), 0.2 / z, 1e-14);
  EXPECT_NEAR(std::exp(prior.log_prior_J(3)), 0.2 * 0.64 / z, 1e-14);
  EXPECT_EQ(prior.log_prior_J(4), kNegInf);
  Rng rng(1);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 30000; ++i) ++counts[static_cast<std::size_t>(prior.sample_J(rng))];
  EXPECT_EQ(counts[4], 0);
  EXPECT_GT(oracle::proportion_p_value(counts[1], 30000, 0.2 / z), 0.001);
  EXPECT_GT(oracle::proportion_p_value(counts[3], 30000, 0.128 / z), 0.001);
}

TEST(PriorJ, SamplerFrequencies) {
  const Prior prior;
  Rng rng(2);
  const int n = 100000;
  std::vector<int> counts(8, 0);
  for (int i = 0; i < n; ++i) {
    const int J = prior.sample_J(rng);
    if (J < 8) ++counts[static_cast<std::size_t>(J)];
  }
  for (int J = 1; J < 8; ++J) {
    EXPECT_GT(oracle::proportion_p_value(counts[static_cast<std::size_t>(J)], n, 0.2 * std::pow(0.8, J - 1)), 0.001)
        << J;
  }
}

TEST(PriorDensities, Normalized) {
  const Prior prior;
  EXPECT_NEAR(integrate_line([&](double k) { return k == 0 ? 0.0 : std::exp(prior.log_prior_k(k)); }), 1.0, 1e-8);
  boost::math::quadrature::exp_sinh<double> e;
  EXPECT_NEAR(e.integrate([&](double m) { return std::exp(prior.log_prior_m(m)); }, 0.0, kInf), 1.0, 1e-8);
  EXPECT_NEAR(e.integrate([&](double r) { return std::exp(prior.log_prior_r(r)); }, 0.0, kInf), 1.0, 1e-8);
  EXPECT_NEAR(integrate_line([&](double b) { return std::exp(prior.log_prior_beta(b)); }), 1.0, 1e-10);
}

TEST(PriorDensities, BetaIncludesScaleFactor) {
  Hyperparams h;
  h.gamma = 2.5;
  const Prior prior(h);
  // Logistic density with scale 1/gamma at 0 is gamma / 4.
  EXPECT_NEAR(std::exp(prior.log_prior_beta(0.0)), 2.5 / 4.0, 1e-15);
  EXPECT_NEAR(integrate_line([&](double b) { return std::exp(prior.log_prior_beta(b)); }), 1.0, 1e-10);
}

TEST(PriorDensities, KSignMass) {
  const Prior prior;
  const Hyperparams h;
  boost::math::quadrature::exp_sinh<double> e;
  const double pos = e.integrate([&](double k) { return oracle::k_prior_unnormalized(k, h); }, 0.0, kInf);
  const double neg = e.integrate([&](double k) { return oracle::k_prior_unnormalized(-k, h); }, 0.0, kInf);
  EXPECT_NEAR(prior.prob_k_positive(), pos / (pos + neg), 1e-9);
  EXPECT_NEAR(prior.log_k_normalizer(), std::log(pos + neg), 1e-9);
}

TEST(PriorDensities, ModeDensityIsSumOfParts) {
  const Prior prior;
  const ModeParams mode{0.7, 1.3, 0.02, {0.1, -0.4, 1.0}};
  double expected = prior.log_prior_k(0.7) + prior.log_prior_m(1.3) + prior.log_prior_r(0.02);
  for (double b : mode.beta) expected += prior.log_prior_beta(b);
  EXPECT_NEAR(prior.log_prior_mode(mode), expected, 1e-12);
  EXPECT_NEAR(log_prior_mode(mode, Hyperparams{}), expected, 1e-12);
}

TEST(PriorSamplers, MatchDensities) {
  const Hyperparams h;
  const Prior prior(h);
  Rng rng(3);
  const int n = 40000;
  std::vector<double> ks, ms, rs, bs;
  for (int i = 0; i < n; ++i) {
    ks.push_back(prior.sample_k(rng));
    ms.push_back(prior.sample_m(rng));
    rs.push_back(prior.sample_r(rng));
    bs.push_back(prior.sample_beta(rng));
  }
  const auto k_cdf = oracle::k_prior_cdf(h);
  const auto m_cdf = oracle::m_prior_cdf(h);
  EXPECT_GT(oracle::ks_p_one_sample(ks, std::cref(k_cdf)), 0.001);
  EXPECT_GT(oracle::ks_p_one_sample(ms, std::cref(m_cdf)), 0.001);
  EXPECT_GT(oracle::ks_p_one_sample(rs, [&](double r) { return oracle::r_prior_cdf(r, h); }), 0.001);
  EXPECT_GT(oracle::ks_p_one_sample(bs, [&](double b) { return oracle::beta_prior_cdf(b, h); }), 0.001);
}

TEST(PriorSamplers, NonDefaultHyperparameters) {
  Hyperparams h;
  h.a_k = 3.0;
  h.b_k = {0.5, 2.0, 0.1};
  h.c_k = {1.0, 0.3, 0.2};
  h.a_m = 2.0;
  h.b_m = 4.0;
  const Prior prior(h);
  Rng rng(4);
  std::vector<double> ks, ms;
  for (int i = 0; i < 30000; ++i) {
    ks.push_back(prior.sample_k(rng));
    ms.push_back(prior.sample_m(rng));
  }
  const auto k_cdf = oracle::k_prior_cdf(h);
  const auto m_cdf = oracle::m_prior_cdf(h);
  EXPECT_GT(oracle::ks_p_one_sample(ks, std::cref(k_cdf)), 0.001);
  EXPECT_GT(oracle::ks_p_one_sample(ms, std::cref(m_cdf)), 0.001);
}

TEST(PriorSamplers, StateShape) {
  const Prior prior;
  Rng rng(5);
  const ModelState s = prior.sample_state(4, rng);
  EXPECT_GE(s.J(), 1u);
  for (const ModeParams& m : s.modes) EXPECT_EQ(m.beta.size(), 4u);
  EXPECT_FALSE(s.has_latents());
}

TEST(Hyperparams, Validation) {
  Hyperparams h;
  h.alpha_J = 1.0;
  EXPECT_THROW(Prior{h}, Error);
  h = Hyperparams{};
  h.b_k = {0.2};
  EXPECT_THROW(Prior{h}, Error);
  h = Hyperparams{};
  h.r_r = -1.0;
  EXPECT_THROW(Prior{h}, Error);
}

TEST(PriorPredictive, CurvesAreValid) {
  const Prior prior;
  Rng rng(6);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({std::sin(i * 1.0), 1.0});
  const std::vector<double> grid{1.0, 10.0, 100.0, 1000.0};
  const PriorPredictiveCurves c = prior_predictive_curves(prior, rows, rng, 300, grid);
  ASSERT_EQ(c.survival.size(), 300u);
  for (const auto& s : c.survival) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      EXPECT_GE(s[g], 0.0);
      EXPECT_LE(s[g], 1.0);
      if (g) {
        EXPECT_LE(s[g], s[g - 1] + 1e-15);
      }
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_LE(c.survival_lo[g], c.survival_hi[g]);
    EXPECT_LE(c.hazard_lo[g], c.hazard_hi[g]);
    double mean = 0.0;
    for (const auto& s : c.survival) mean += s[g];
    EXPECT_NEAR(c.survival_mean[g], mean / 300.0, 1e-12);
  }
}
