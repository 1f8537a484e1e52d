#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpm/error.hpp"
#include "gpm/prediction.hpp"
#include "gpm/special.hpp"
#include "gpm/stats.hpp"
#include "gpm/synthetic.hpp"

using namespace gpm;

namespace {

// One always-active exponential mode; a constant coefficient of -40 puts the
// activation probability within 1e-17 of one.
ModelState exponential_state(double rate) {
  ModelState s;
  s.modes.push_back({1.0, 1.0, rate, {0.0, -40.0}});
  return s;
}

const std::vector<double> kRow{0.3, 1.0};

std::vector<AsiSample> samples_from(const std::vector<double>& values) {
  std::vector<AsiSample> out;
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({i, values[i], false});
  return out;
}

AsiReport report_with_draws(std::vector<double> draws) {
  AsiReport r;
  r.mean_samples = std::move(draws);
  r.mean = mean_of(r.mean_samples);
  r.ci_lo = quantile(r.mean_samples, 0.025);
  r.ci_hi = quantile(r.mean_samples, 0.975);
  return r;
}

}  // namespace

TEST(PosteriorPredictive, SingleExponentialSample) {
  const double rate = 0.01;
  const PosteriorPredictive pp(std::vector<ModelState>{exponential_state(rate)});
  const auto row = pp.row(kRow);
  for (double t : {1.0, 50.0, 300.0}) {
    EXPECT_NEAR(row.survival(t), std::exp(-rate * t), 1e-12);
    EXPECT_NEAR(std::exp(row.log_density(t)), rate * std::exp(-rate * t), 1e-14);
    EXPECT_NEAR(row.hazard(t), rate, 1e-12);
  }
  EXPECT_LT(row.p_infinity(), 1e-16);
}

TEST(PosteriorPredictive, AveragingIdenticalSamplesIsIdempotent) {
  ModelState s;
  s.modes.push_back({1.4, 2.0, 0.02, {0.5, 0.1}});
  s.modes.push_back({-0.7, 0.8, 0.004, {-1.0, 0.3}});
  const std::vector<double> grid{3.0, 30.0, 300.0, 3000.0};
  const PredictiveCurve one = PosteriorPredictive(std::vector<ModelState>{s}).curve(kRow, grid);
  const PredictiveCurve many = PosteriorPredictive(std::vector<ModelState>(7, s)).curve(kRow, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_NEAR(many.survival[g], one.survival[g], 1e-14);
    EXPECT_NEAR(many.log_density[g], one.log_density[g], 1e-12);
    EXPECT_NEAR(many.hazard[g], one.hazard[g], 1e-12 * one.hazard[g]);
  }
  EXPECT_NEAR(many.p_infinity, one.p_infinity, 1e-15);
}

TEST(PosteriorPredictive, MixtureOfTwoExponentials) {
  const double a = 0.01, b = 0.05;
  const PosteriorPredictive pp(std::vector<ModelState>{exponential_state(a), exponential_state(b)});
  const auto row = pp.row(kRow);
  for (double t : {2.0, 20.0, 200.0}) {
    const double s = 0.5 * (std::exp(-a * t) + std::exp(-b * t));
    const double f = 0.5 * (a * std::exp(-a * t) + b * std::exp(-b * t));
    EXPECT_NEAR(row.survival(t), s, 1e-12);
    EXPECT_NEAR(std::exp(row.log_density(t)), f, 1e-12);
    EXPECT_NEAR(row.hazard(t), f / s, 1e-12);
  }
}

TEST(PosteriorPredictive, SurvivalBoundedAndMonotone) {
  const Prior prior;
  Rng rng(3);
  std::vector<ModelState> states;
  for (int i = 0; i < 100; ++i) states.push_back(prior.sample_state(2, rng));
  const PosteriorPredictive pp(states);
  std::vector<double> grid;
  for (int g = 0; g < 60; ++g) grid.push_back(std::pow(10.0, -1.0 + 0.1 * g));
  const PredictiveCurve c = pp.curve(kRow, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_LE(c.survival[g], 1.0 + 1e-15);
    EXPECT_GE(c.survival[g], c.p_infinity - 1e-12);
    if (g > 0) {
      EXPECT_LE(c.survival[g], c.survival[g - 1] + 1e-15);
    }
    EXPECT_GE(c.hazard[g], 0.0);
  }
}

TEST(PosteriorPredictive, EmptyChainAndBadGrid) {
  try {
    PosteriorPredictive pp(std::vector<ModelState>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "EMPTY_CHAIN");
  }
  std::vector<ChainRecord> burn(3);
  for (auto& r : burn) r.burn_in = true;
  EXPECT_THROW(PosteriorPredictive{std::span<const ChainRecord>(burn)}, Error);
  const PosteriorPredictive pp(std::vector<ModelState>{exponential_state(0.01)});
  const std::vector<double> grid{1.0, 0.0};
  EXPECT_THROW(pp.curve(kRow, grid), Error);
}

TEST(Reference, CensoringAwareRate) {
  const std::vector<PatientRecord> train{
      {{1.0}, 50.0, false}, {{1.0}, 100.0, true}, {{1.0}, 50.0, false}};
  EXPECT_NEAR(fit_reference(train).rate, 0.01, 1e-15);

  Rng rng(4);
  std::exponential_distribution<double> expo(1.0 / 200.0);
  std::vector<PatientRecord> sim;
  int events = 0;
  for (int i = 0; i < 20000; ++i) {
    const double t = expo(rng);
    const bool c = t > 300.0;
    events += c ? 0 : 1;
    sim.push_back({{1.0}, c ? 300.0 : t, c});
  }
  const double se = (1.0 / 200.0) / std::sqrt(static_cast<double>(events));
  EXPECT_NEAR(fit_reference(sim).rate, 1.0 / 200.0, 3.0 * se);

  const std::vector<PatientRecord> none{{{1.0}, 10.0, true}};
  try {
    fit_reference(none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "NO_EVENTS");
  }
}

TEST(AsiSample, InformationGainInNats) {
  const ReferencePredictor ref{0.01};
  const PatientRecord died{{1.0}, 40.0, false};
  PointPrediction same{ref.log_density(40.0), ref.log_survival(40.0)};
  EXPECT_NEAR(asi_sample(same, ref, died).value, 0.0, 1e-15);
  PointPrediction twice{ref.log_density(40.0) + std::log(2.0), 0.0};
  EXPECT_NEAR(asi_sample(twice, ref, died, 7).value, std::log(2.0), 1e-14);
  EXPECT_EQ(asi_sample(twice, ref, died, 7).patient, 7u);

  const ReferencePredictor ref2{-std::log(0.8) / 100.0};
  const PatientRecord alive{{1.0}, 100.0, true};
  PointPrediction p{0.0, std::log(0.9)};
  const AsiSample s = asi_sample(p, ref2, alive);
  EXPECT_TRUE(s.censored);
  EXPECT_NEAR(s.value, std::log(0.9 / 0.8), 1e-14);
}

TEST(AsiSample, FloorsVanishingPredictions) {
  const ReferencePredictor ref{0.01};
  const PatientRecord died{{1.0}, 40.0, false};
  PointPrediction zero{kNegInf, 0.0};
  EXPECT_NEAR(asi_sample(zero, ref, died).value, std::log(kDensityFloor) - ref.log_density(40.0), 1e-9);
}

TEST(AsiSample, InvariantUnderTimeRescaling) {
  ModelState s;
  s.modes.push_back({1.7, 2.5, 0.02, {0.4, -0.2}});
  s.modes.push_back({-0.6, 0.9, 0.003, {-0.8, 0.5}});
  const double c = 30.4375;
  ModelState scaled = s;
  for (ModeParams& m : scaled.modes) m.r /= c;
  const PosteriorPredictive a(std::vector<ModelState>{s});
  const PosteriorPredictive b(std::vector<ModelState>{scaled});
  const ReferencePredictor ra{0.013}, rb{0.013 / c};
  for (bool censored : {false, true}) {
    for (double t : {3.0, 45.0, 700.0}) {
      const PatientRecord p{kRow, t, censored};
      const PatientRecord q{kRow, t * c, censored};
      EXPECT_NEAR(asi_sample(a, ra, p).value, asi_sample(b, rb, q).value, 1e-10) << t << censored;
    }
  }
}

TEST(SplitMask, HalfSizes) {
  for (std::size_t n : {4u, 11u, 200u}) {
    const auto mask = random_split_mask(n, 9);
    const auto zeros = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 0));
    EXPECT_EQ(zeros, n / 2);
    EXPECT_EQ(n - zeros, (n + 1) / 2);
    EXPECT_EQ(mask, random_split_mask(n, 9));
  }
  EXPECT_NE(random_split_mask(200, 1), random_split_mask(200, 2));
}

class SplitProtocol : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(5);
    const SyntheticData d = generate(planted_signal_spec(40), {}, rng);
    table = to_raw_table(d.data);
    options.schedule = {10, 60, 20, -6.0, 6.0};
    options.seed = 3;
    options.split_seed = 4;
  }
  RawTable table;
  ProtocolOptions options;
  const std::vector<std::size_t> subset{0, 1};
  const Prior prior;
};

TEST_F(SplitProtocol, EveryPatientScoredOnceOutOfSample) {
  const ProtocolResult r = split_half_protocol(table, subset, prior, options);
  ASSERT_EQ(r.samples.size(), 40u);
  ASSERT_EQ(r.half.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(r.samples[i].patient, i);
    EXPECT_EQ(r.samples[i].censored, table.censored[i] != 0);
    EXPECT_TRUE(std::isfinite(r.samples[i].value));
  }
  EXPECT_EQ(std::count(r.half.begin(), r.half.end(), 0), 20);
  EXPECT_EQ(r.split_seed, 4u);
}

TEST_F(SplitProtocol, DeterministicAndMaskDriven) {
  const ProtocolResult a = split_half_protocol(table, subset, prior, options);
  const ProtocolResult b =
      split_half_protocol_with_mask(table, subset, prior, options, random_split_mask(40, options.split_seed));
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(a.samples[i].value, b.samples[i].value);
  options.n_threads = 1;
  const ProtocolResult c = split_half_protocol(table, subset, prior, options);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(a.samples[i].value, c.samples[i].value);
}

TEST_F(SplitProtocol, RejectsBadMasks) {
  std::vector<int> mask(40, 0);
  EXPECT_THROW(split_half_protocol_with_mask(table, subset, prior, options, mask), Error);
  mask.resize(39);
  EXPECT_THROW(split_half_protocol_with_mask(table, subset, prior, options, mask), Error);
}

TEST(MeanAsi, ConstantSamples) {
  Rng rng(6);
  const auto s = samples_from(std::vector<double>(30, 0.25));
  const AsiReport r = estimate_mean_asi(s, rng);
  EXPECT_EQ(r.mean_samples.size(), 850u);
  EXPECT_NEAR(r.mean, 0.25, 1e-14);
  EXPECT_NEAR(r.ci_lo, 0.25, 1e-14);
  EXPECT_NEAR(r.ci_hi, 0.25, 1e-14);
}

TEST(MeanAsi, TooFewSamples) {
  Rng rng(7);
  try {
    estimate_mean_asi(samples_from(std::vector<double>(9, 1.0)), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "TOO_FEW_SAMPLES");
  }
}

TEST(MeanAsi, IntervalWidthMatchesCentralLimit) {
  Rng rng(8);
  std::normal_distribution<double> n(0.1, 0.7);
  std::vector<double> v(400);
  for (double& x : v) x = n(rng);
  MeanAsiOptions opt;
  opt.n_draws = 4000;
  const AsiReport r = estimate_mean_asi(samples_from(v), rng, opt);
  const double expected = 3.92 * std::sqrt(variance_of(v) / 400.0);
  EXPECT_NEAR((r.ci_hi - r.ci_lo) / expected, 1.0, 0.2);
  EXPECT_NEAR(r.mean, mean_of(v), 0.2 * expected);
}

TEST(MeanAsi, BootstrapCoverage) {
  Rng rng(9);
  std::normal_distribution<double> n(0.3, 1.0);
  int inside = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(100);
    for (double& x : v) x = n(rng);
    const AsiReport r = estimate_mean_asi(samples_from(v), rng);
    inside += (r.ci_lo <= 0.3 && 0.3 <= r.ci_hi) ? 1 : 0;
  }
  EXPECT_GE(inside, 90);
}

TEST(MeanAsi, SkewStudentOption) {
  Rng rng(10);
  std::normal_distribution<double> n(-0.2, 0.5);
  std::vector<double> v(150);
  for (double& x : v) x = n(rng);
  MeanAsiOptions opt;
  opt.method = MeanAsiMethod::SkewStudent;
  const AsiReport r = estimate_mean_asi(samples_from(v), rng, opt);
  EXPECT_EQ(r.method, MeanAsiMethod::SkewStudent);
  EXPECT_EQ(r.mean_samples.size(), 850u);
  const double se = std::sqrt(variance_of(v) / 150.0);
  EXPECT_NEAR(r.mean, mean_of(v), 2.0 * se);
  EXPECT_LT(r.ci_lo, r.mean);
  EXPECT_GT(r.ci_hi, r.mean);
  EXPECT_NEAR((r.ci_hi - r.ci_lo) / (3.92 * se), 1.0, 0.5);
}

TEST(Compare, AllPairsAndGaussian) {
  std::vector<double> a;
  for (int i = 0; i < 500; ++i) a.push_back(0.5 * i / 500.0);
  const AsiReport ra = report_with_draws(a);
  EXPECT_DOUBLE_EQ(compare_subsets(ra, ra).all_pairs, 0.5);
  EXPECT_DOUBLE_EQ(compare_subsets(ra, ra).gaussian, 0.5);
  std::vector<double> b = a;
  for (double& x : b) x += 1.0;
  const AsiReport rb = report_with_draws(b);
  EXPECT_DOUBLE_EQ(compare_subsets(rb, ra).all_pairs, 1.0);
  EXPECT_DOUBLE_EQ(compare_subsets(ra, rb).all_pairs, 0.0);
  const double va = variance_of(a);
  EXPECT_NEAR(compare_subsets(rb, ra).gaussian, normal_cdf(1.0 / std::sqrt(2 * va)), 1e-12);

  Rng rng(11);
  std::normal_distribution<double> n1(0.2, 0.1), n2(0.1, 0.1);
  std::vector<double> x(2000), y(2000);
  for (double& v : x) v = n1(rng);
  for (double& v : y) v = n2(rng);
  const Comparison c = compare_subsets(report_with_draws(x), report_with_draws(y));
  EXPECT_NEAR(c.all_pairs, normal_cdf(0.1 / std::sqrt(0.02)), 0.02);
  EXPECT_NEAR(c.gaussian, normal_cdf(0.1 / std::sqrt(0.02)), 0.02);
  EXPECT_THROW(compare_subsets(AsiReport{}, ra), Error);
}

TEST(Compare, AgainstPublishedCentiles) {
  Rng rng(12);
  std::normal_distribution<double> n(0.3, 0.02);
  std::vector<double> d(850);
  for (double& v : d) v = n(rng);
  const AsiReport r = report_with_draws(d);
  const PublishedComparison c = compare_to_published(r, 0.1, 0.05, 0.15);
  const double sd = std::hypot(0.1 / 3.92, std::sqrt(variance_of(d)));
  EXPECT_NEAR(c.gaussian, normal_cdf((r.mean - 0.1) / sd), 1e-12);
  EXPECT_GT(c.gaussian, 0.99);
  EXPECT_NEAR(c.distribution_free, 0.975, 1e-12);

  const AsiReport same = report_with_draws(std::vector<double>(100, 0.1));
  EXPECT_NEAR(compare_to_published(same, 0.1, 0.05, 0.15).gaussian, 0.5, 1e-12);
  EXPECT_THROW(compare_to_published(r, 0.2, 0.05, 0.15), Error);
}

TEST(Greedy, PicksStrongestCandidateEachRound) {
  const std::vector<double> gain{0.0, 0.05, 0.4, 0.1, 0.2};
  const SubsetEvaluator eval = [&](std::span<const std::size_t> subset) {
    double m = 0.0;
    for (std::size_t c : subset) m += gain[c];
    return report_with_draws(std::vector<double>(20, m));
  };
  const std::vector<std::size_t> base{0};
  const std::vector<std::size_t> cand{1, 2, 3, 4};
  const auto rows = greedy_biomarker_selection(base, cand, 2, eval, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].added, -1);
  EXPECT_EQ(rows[1].added, 2);
  EXPECT_EQ(rows[2].added, 4);
  EXPECT_EQ(rows[1].tried.size(), 4u);
  EXPECT_EQ(rows[2].tried.size(), 3u);
  EXPECT_EQ(rows[2].subset, (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_NEAR(rows[2].report.mean, 0.6, 1e-12);

  const auto threaded = greedy_biomarker_selection(base, cand, 10, eval, 4);
  EXPECT_EQ(threaded.size(), 5u);
  EXPECT_EQ(threaded[3].added, 3);

  const std::vector<std::size_t> one{3};
  const auto single = greedy_biomarker_selection(base, one, 3, eval);
  ASSERT_EQ(single.size(), 2u);
  EXPECT_EQ(single[1].added, 3);

  const std::vector<std::size_t> overlap{0, 1};
  try {
    greedy_biomarker_selection(base, overlap, 1, eval);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "OVERLAPPING_SUBSETS");
  }
}
