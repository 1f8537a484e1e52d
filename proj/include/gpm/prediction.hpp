#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpm/engine.hpp"
#include "gpm/model.hpp"
#include "gpm/standardize.hpp"

namespace gpm {

/// Log-density values are floored here (in linear space) before scoring.
inline constexpr double kDensityFloor = 1e-300;

struct PredictiveCurve {
  std::vector<double> grid;
  std::vector<double> survival;
  std::vector<double> log_density;
  std::vector<double> hazard;
  double p_infinity = 0.0;  // probability of never relapsing
};

/// Mixture over posterior samples of the per-sample predictive distribution.
class PosteriorPredictive {
 public:
  explicit PosteriorPredictive(std::vector<ModelState> samples);
  explicit PosteriorPredictive(std::span<const ChainRecord> records);

  std::size_t n_samples() const { return samples_.size(); }

  /// Per-sample mode slices for one covariate row.
  class Row {
   public:
    double survival(double t) const;
    double log_survival(double t) const;
    /// log of the averaged density, floored at kDensityFloor.
    double log_density(double t) const;
    /// Averaged density over averaged survival.
    double hazard(double t) const;
    double p_infinity() const;

   private:
    friend class PosteriorPredictive;
    std::vector<std::vector<ModeSlice>> slices_;
  };

  Row row(std::span<const double> covariates) const;
  PredictiveCurve curve(std::span<const double> covariates, std::span<const double> grid) const;

 private:
  std::vector<ModelState> samples_;
};

PredictiveCurve posterior_predictive(std::span<const ChainRecord> chain, std::span<const double> covariates,
                                     std::span<const double> grid);

/// Exponential reference common to all patients.
struct ReferencePredictor {
  double rate = 0.0;  // 1/days
  double log_density(double t) const { return std::log(rate) - rate * t; }
  double log_survival(double t) const { return -rate * t; }
};

/// Censoring-aware maximum-likelihood rate: events / total observed time.
ReferencePredictor fit_reference(std::span<const PatientRecord> training);

struct AsiSample {
  std::size_t patient = 0;
  double value = 0.0;  // nats
  bool censored = false;
};

/// Prediction for one patient at their observed time.
struct PointPrediction {
  double log_density = 0.0;
  double log_survival = 0.0;
};

AsiSample asi_sample(const PointPrediction& prediction, const ReferencePredictor& reference,
                     const PatientRecord& patient, std::size_t patient_id = 0);
AsiSample asi_sample(const PosteriorPredictive& prediction, const ReferencePredictor& reference,
                     const PatientRecord& patient, std::size_t patient_id = 0);

struct ProtocolOptions {
  Hyperparams hyper{};
  AnnealSchedule schedule{};
  std::uint64_t seed = 1;        // chains
  std::uint64_t split_seed = 2;  // which half each patient lands in
  /// Standardize with statistics of the whole table instead of the
  /// training half.
  bool standardize_on_full = false;
  int n_threads = 0;
};

struct ProtocolResult {
  std::vector<AsiSample> samples;  // sorted by patient, one per patient
  std::vector<int> half;           // 0 or 1 per patient
  std::uint64_t split_seed = 0;
};

/// Random halves of sizes floor(n/2) and ceil(n/2).
std::vector<int> random_split_mask(std::size_t n, std::uint64_t split_seed);

/// Trains on each half, scores the other half against a reference fitted on
/// the same training half.
ProtocolResult split_half_protocol(const RawTable& table, std::span<const std::size_t> subset,
                                   const Prior& prior, const ProtocolOptions& options);
ProtocolResult split_half_protocol_with_mask(const RawTable& table, std::span<const std::size_t> subset,
                                             const Prior& prior, const ProtocolOptions& options,
                                             std::span<const int> mask);

enum class MeanAsiMethod { BayesianBootstrap, SkewStudent };

struct MeanAsiOptions {
  MeanAsiMethod method = MeanAsiMethod::BayesianBootstrap;
  int n_draws = 850;
};

struct AsiReport {
  std::vector<AsiSample> samples;
  std::vector<double> mean_samples;  // nats
  double mean = 0.0;
  double ci_lo = 0.0;  // 2.5%
  double ci_hi = 0.0;  // 97.5%
  MeanAsiMethod method = MeanAsiMethod::BayesianBootstrap;
  std::uint64_t split_seed = 0;
  std::vector<std::string> subset;
};

AsiReport estimate_mean_asi(std::span<const AsiSample> samples, Rng& rng, const MeanAsiOptions& options = {});

/// Posterior draws of the mean of a single skew-Student fitted to `values`
/// by random-walk Metropolis.
std::vector<double> skew_student_mean_draws(std::span<const double> values, int n_draws, Rng& rng);

struct Comparison {
  double all_pairs = 0.5;  // P(a > b) over all cross pairs, ties counted half
  double gaussian = 0.5;   // Phi((mu_a - mu_b) / sqrt(var_a + var_b))
};

Comparison compare_subsets(const AsiReport& a, const AsiReport& b);

struct PublishedComparison {
  double gaussian = 0.5;
  /// Lower bound on P(report > published) using only the published
  /// 2.5%/97.5% centiles.
  double distribution_free = 0.0;
};

PublishedComparison compare_to_published(const AsiReport& report, double published_mean, double published_lo,
                                         double published_hi);

struct GreedyRow {
  int added = -1;  // covariate index added this round, -1 for the base row
  std::vector<std::size_t> subset;
  AsiReport report;
  /// (candidate, mean ASI) for every candidate tried in this round.
  std::vector<std::pair<std::size_t, double>> tried;
};

using SubsetEvaluator = std::function<AsiReport(std::span<const std::size_t> subset)>;

/// Adds, one per round, the candidate whose subset scores the highest mean
/// ASI. The evaluator must be safe to call concurrently.
std::vector<GreedyRow> greedy_biomarker_selection(std::span<const std::size_t> base,
                                                  std::span<const std::size_t> candidates, int budget,
                                                  const SubsetEvaluator& evaluate, int n_threads = 0);

}  // namespace gpm
