#include "gpm/prediction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "gpm/error.hpp"
#include "gpm/stats.hpp"

namespace gpm {
namespace {

template <class F>
void parallel_for(std::size_t n, int n_threads, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(n_threads > 0 ? n_threads : default_thread_count()));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
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
}

}  // namespace

PosteriorPredictive::PosteriorPredictive(std::vector<ModelState> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw UsageError("EMPTY_CHAIN", "posterior predictive needs at least one sample");
}

PosteriorPredictive::PosteriorPredictive(std::span<const ChainRecord> records) {
  for (const ChainRecord& rec : records) {
    if (!rec.burn_in) samples_.push_back(rec.state);
  }
  if (samples_.empty()) throw UsageError("EMPTY_CHAIN", "chain has no retained samples");
}

PosteriorPredictive::Row PosteriorPredictive::row(std::span<const double> covariates) const {
  Row r;
  r.slices_.reserve(samples_.size());
  for (const ModelState& s : samples_) r.slices_.push_back(mode_slices(s.modes, covariates));
  return r;
}

double PosteriorPredictive::Row::survival(double t) const {
  double acc = 0.0;
  for (const auto& sl : slices_) acc += combined_survival(t, sl);
  return acc / static_cast<double>(slices_.size());
}

double PosteriorPredictive::Row::log_survival(double t) const {
  std::vector<double> terms(slices_.size());
  for (std::size_t s = 0; s < slices_.size(); ++s) terms[s] = combined_log_survival(t, slices_[s]);
  const double v = log_sum_exp(terms) - std::log(static_cast<double>(slices_.size()));
  return std::max(v, std::log(kDensityFloor));
}

double PosteriorPredictive::Row::log_density(double t) const {
  std::vector<double> terms(slices_.size());
  for (std::size_t s = 0; s < slices_.size(); ++s) terms[s] = combined_log_density(t, slices_[s]);
  const double v = log_sum_exp(terms) - std::log(static_cast<double>(slices_.size()));
  return std::max(v, std::log(kDensityFloor));
}

double PosteriorPredictive::Row::hazard(double t) const {
  std::vector<double> terms(slices_.size());
  for (std::size_t s = 0; s < slices_.size(); ++s) terms[s] = combined_log_density(t, slices_[s]);
  const double log_f = log_sum_exp(terms) - std::log(static_cast<double>(slices_.size()));
  return std::exp(log_f - log_survival(t));
}

double PosteriorPredictive::Row::p_infinity() const {
  double acc = 0.0;
  for (const auto& sl : slices_) acc += std::exp(combined_log_cure(sl));
  return acc / static_cast<double>(slices_.size());
}

PredictiveCurve PosteriorPredictive::curve(std::span<const double> covariates, std::span<const double> grid) const {
  const Row r = row(covariates);
  PredictiveCurve out;
  out.grid.assign(grid.begin(), grid.end());
  for (double t : grid) {
    if (!(t > 0.0)) throw UsageError("BAD_GRID", "prediction grid values must be positive");
    out.survival.push_back(r.survival(t));
    out.log_density.push_back(r.log_density(t));
    out.hazard.push_back(r.hazard(t));
  }
  out.p_infinity = r.p_infinity();
  return out;
}

PredictiveCurve posterior_predictive(std::span<const ChainRecord> chain, std::span<const double> covariates,
                                     std::span<const double> grid) {
  return PosteriorPredictive(chain).curve(covariates, grid);
}

ReferencePredictor fit_reference(std::span<const PatientRecord> training) {
  double exposure = 0.0;
  int events = 0;
  for (const PatientRecord& p : training) {
    exposure += p.time;
    events += p.censored ? 0 : 1;
  }
  if (events == 0) throw DataError("NO_EVENTS", "reference fit needs at least one uncensored patient");
  return {events / exposure};
}

AsiSample asi_sample(const PointPrediction& prediction, const ReferencePredictor& reference,
                     const PatientRecord& patient, std::size_t patient_id) {
  const double floor = std::log(kDensityFloor);
  AsiSample out{patient_id, 0.0, patient.censored};
  if (patient.censored) {
    out.value = std::max(prediction.log_survival, floor) - reference.log_survival(patient.time);
  } else {
    out.value = std::max(prediction.log_density, floor) - reference.log_density(patient.time);
  }
  return out;
}

AsiSample asi_sample(const PosteriorPredictive& prediction, const ReferencePredictor& reference,
                     const PatientRecord& patient, std::size_t patient_id) {
  const PosteriorPredictive::Row r = prediction.row(patient.covariates);
  PointPrediction p;
  if (patient.censored) {
    p.log_survival = r.log_survival(patient.time);
  } else {
    p.log_density = r.log_density(patient.time);
  }
  return asi_sample(p, reference, patient, patient_id);
}

std::vector<int> random_split_mask(std::size_t n, std::uint64_t split_seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(split_seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<int> mask(n, 1);
  for (std::size_t i = 0; i < n / 2; ++i) mask[order[i]] = 0;
  return mask;
}

ProtocolResult split_half_protocol_with_mask(const RawTable& table, std::span<const std::size_t> subset,
                                             const Prior& prior, const ProtocolOptions& options,
                                             std::span<const int> mask) {
  const std::size_t n = table.size();
  if (n < 4) throw UsageError("TOO_FEW_PATIENTS", "split-half protocol needs at least 4 patients");
  if (mask.size() != n) throw UsageError("BAD_MASK", "split mask length differs from patient count");
  std::vector<std::size_t> halves[2];
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] != 0 && mask[i] != 1) throw UsageError("BAD_MASK", "split mask entries must be 0 or 1");
    halves[mask[i]].push_back(i);
  }
  if (halves[0].empty() || halves[1].empty()) throw UsageError("BAD_MASK", "both halves must be nonempty");

  ProtocolResult result;
  result.half.assign(mask.begin(), mask.end());
  result.split_seed = options.split_seed;
  result.samples.resize(n);
  parallel_for(2, options.n_threads, [&](std::size_t h) {
    const std::vector<std::size_t>& train = halves[h];
    const std::vector<std::size_t>& test = halves[1 - h];
    const StandardizationRecord record =
        options.standardize_on_full ? fit_standardization(table, subset) : fit_standardization(table, subset, train);
    const std::vector<PatientRecord> train_records = standardized_records(table, subset, record, train);
    const Dataset train_data(train_records, record.n_covariates());
    const ReferencePredictor reference = fit_reference(train_records);
    const ChainResult chain = run_chain(train_data, prior, options.schedule, derive_seed(options.seed, h));
    const PosteriorPredictive predictive(chain.records);
    const std::vector<PatientRecord> test_records = standardized_records(table, subset, record, test);
    for (std::size_t q = 0; q < test.size(); ++q) {
      result.samples[test[q]] = asi_sample(predictive, reference, test_records[q], test[q]);
    }
  });
  return result;
}

ProtocolResult split_half_protocol(const RawTable& table, std::span<const std::size_t> subset,
                                   const Prior& prior, const ProtocolOptions& options) {
  const std::vector<int> mask = random_split_mask(table.size(), options.split_seed);
  return split_half_protocol_with_mask(table, subset, prior, options, mask);
}

AsiReport estimate_mean_asi(std::span<const AsiSample> samples, Rng& rng, const MeanAsiOptions& options) {
  if (samples.size() < 10) throw UsageError("TOO_FEW_SAMPLES", "mean ASI needs at least 10 samples");
  if (options.n_draws < 1) throw UsageError("BAD_PARAM", "need at least one mean-ASI draw");
  AsiReport report;
  report.samples.assign(samples.begin(), samples.end());
  report.method = options.method;
  std::vector<double> values;
  values.reserve(samples.size());
  for (const AsiSample& s : samples) {
    if (!std::isfinite(s.value)) throw NumericalError("NONFINITE_ASI", "ASI sample is not finite");
    values.push_back(s.value);
  }
  if (options.method == MeanAsiMethod::SkewStudent) {
    report.mean_samples = skew_student_mean_draws(values, options.n_draws, rng);
  } else {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> g(values.size());
    report.mean_samples.reserve(static_cast<std::size_t>(options.n_draws));
    for (int d = 0; d < options.n_draws; ++d) {
      double total = 0.0, acc = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        g[i] = expo(rng);
        total += g[i];
        acc += g[i] * values[i];
      }
      report.mean_samples.push_back(acc / total);
    }
  }
  report.mean = mean_of(report.mean_samples);
  std::vector<double> sorted = report.mean_samples;
  std::sort(sorted.begin(), sorted.end());
  report.ci_lo = quantile_sorted(sorted, 0.025);
  report.ci_hi = quantile_sorted(sorted, 0.975);
  return report;
}

Comparison compare_subsets(const AsiReport& a, const AsiReport& b) {
  if (a.mean_samples.empty() || b.mean_samples.empty()) {
    throw UsageError("EMPTY_REPORT", "comparison needs mean-ASI samples in both reports");
  }
  std::vector<double> sb = b.mean_samples;
  std::sort(sb.begin(), sb.end());
  double wins = 0.0;
  for (double x : a.mean_samples) {
    const auto lo = std::lower_bound(sb.begin(), sb.end(), x);
    const auto hi = std::upper_bound(sb.begin(), sb.end(), x);
    wins += static_cast<double>(lo - sb.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  Comparison out;
  out.all_pairs = wins / (static_cast<double>(a.mean_samples.size()) * static_cast<double>(sb.size()));
  const double va = variance_of(a.mean_samples);
  const double vb = variance_of(b.mean_samples);
  const double diff = mean_of(a.mean_samples) - mean_of(b.mean_samples);
  out.gaussian = va + vb > 0.0 ? normal_cdf(diff / std::sqrt(va + vb)) : (diff > 0 ? 1.0 : diff < 0 ? 0.0 : 0.5);
  return out;
}

PublishedComparison compare_to_published(const AsiReport& report, double published_mean, double published_lo,
                                         double published_hi) {
  if (!(published_lo <= published_mean && published_mean <= published_hi)) {
    throw UsageError("BAD_INTERVAL", "published interval must contain the published mean");
  }
  PublishedComparison out;
  const double sd_pub = (published_hi - published_lo) / 3.92;
  const double sd_rep = report.mean_samples.size() > 1 ? std::sqrt(variance_of(report.mean_samples))
                                                       : (report.ci_hi - report.ci_lo) / 3.92;
  const double sd = std::hypot(sd_pub, sd_rep);
  const double diff = report.mean - published_mean;
  out.gaussian = sd > 0.0 ? normal_cdf(diff / sd) : (diff > 0 ? 1.0 : diff < 0 ? 0.0 : 0.5);
  std::span<const double> draws = report.mean_samples;
  std::vector<double> fallback;
  if (draws.empty()) {
    fallback = {report.mean};
    draws = fallback;
  }
  double acc = 0.0;
  for (double a : draws) acc += a >= published_hi ? 0.975 : (a >= published_lo ? 0.025 : 0.0);
  out.distribution_free = acc / static_cast<double>(draws.size());
  return out;
}

std::vector<GreedyRow> greedy_biomarker_selection(std::span<const std::size_t> base,
                                                  std::span<const std::size_t> candidates, int budget,
                                                  const SubsetEvaluator& evaluate, int n_threads) {
  for (std::size_t c : candidates) {
    if (std::find(base.begin(), base.end(), c) != base.end()) {
      throw UsageError("OVERLAPPING_SUBSETS", "candidate " + std::to_string(c) + " is already in the base subset");
    }
  }
  std::vector<GreedyRow> rows;
  GreedyRow first;
  first.subset.assign(base.begin(), base.end());
  first.report = evaluate(first.subset);
  rows.push_back(std::move(first));

  std::vector<std::size_t> remaining(candidates.begin(), candidates.end());
  const int rounds = std::min<int>(budget, static_cast<int>(remaining.size()));
  for (int round = 0; round < rounds; ++round) {
    const std::vector<std::size_t> current = rows.back().subset;
    std::vector<AsiReport> reports(remaining.size());
    parallel_for(remaining.size(), n_threads, [&](std::size_t c) {
      std::vector<std::size_t> trial = current;
      trial.push_back(remaining[c]);
      reports[c] = evaluate(trial);
    });
    std::size_t best = 0;
    GreedyRow row;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      row.tried.emplace_back(remaining[c], reports[c].mean);
      if (reports[c].mean > reports[best].mean) best = c;
    }
    row.added = static_cast<int>(remaining[best]);
    row.subset = current;
    row.subset.push_back(remaining[best]);
    row.report = std::move(reports[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace gpm
