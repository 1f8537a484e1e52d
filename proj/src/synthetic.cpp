#include "gpm/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "gpm/error.hpp"
#include "gpm/model.hpp"
#include "gpm/stats.hpp"

namespace gpm {
namespace {

constexpr double kMaxLogTime = 690.0;

struct ModeSummary {
  std::vector<double> survival, hazard;
};

ModeSummary curves_for(std::span<const ModeParams> modes, std::span<const double> row,
                       std::span<const double> grid) {
  const std::vector<ModeSlice> slices = mode_slices(modes, row);
  ModeSummary out;
  out.survival.resize(grid.size());
  out.hazard.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    out.survival[g] = combined_survival(grid[g], slices);
    out.hazard[g] = combined_hazard(grid[g], slices);
  }
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (modes.empty()) throw UsageError("BAD_SPEC", "synthetic spec needs at least one mode");
  const std::size_t V = n_covariates();
  if (V == 0) throw UsageError("BAD_SPEC", "beta must include the constant column");
  for (const ModeParams& m : modes) m.validate(V);
  if (!(horizon > 0.0)) throw UsageError("BAD_SPEC", "horizon must be positive");
  if (!(censor_rate >= 0.0)) throw UsageError("BAD_SPEC", "censor_rate must be nonnegative");
  if (!std::isfinite(horizon) && censor_rate == 0.0) {
    throw UsageError("BAD_SPEC", "need a finite horizon or a positive censoring rate");
  }
  if (covariates == CovariateSource::Resample) {
    if (covariate_pool.empty()) throw UsageError("BAD_SPEC", "resampling needs a nonempty covariate pool");
    for (const auto& row : covariate_pool) {
      if (row.size() != V || row.back() != 1.0) {
        throw UsageError("BAD_SPEC", "pool rows must match beta length and end with the constant 1");
      }
    }
  }
}

std::vector<double> standard_normal_row(std::size_t n_covariates, Rng& rng) {
  std::vector<double> row(n_covariates, 1.0);
  for (std::size_t v = 0; v + 1 < n_covariates; ++v) row[v] = standard_normal(rng);
  return row;
}

std::vector<ExtendedTime> draw_mode_times(std::span<const ModeParams> modes, std::span<const double> covariates,
                                          Rng& rng) {
  std::vector<ExtendedTime> out;
  out.reserve(modes.size());
  for (const ModeParams& mode : modes) {
    const double p = Activation::from_linear(linear_predictor(mode.beta, covariates)).p();
    if (!(uniform_open(rng) < p)) {
      out.push_back(ExtendedTime::infinite());
      continue;
    }
    const double lz = log_gamma_variate(mode.m, rng);
    const double lx = std::clamp((lz - std::log(mode.m)) / mode.k - std::log(mode.r), -kMaxLogTime, kMaxLogTime);
    out.push_back(ExtendedTime::finite(std::exp(lx)));
  }
  return out;
}

SyntheticData generate(const SyntheticSpec& spec, std::span<const double> grid, Rng& rng) {
  spec.validate();
  const std::size_t V = spec.n_covariates();
  const std::size_t J = spec.modes.size();
  std::vector<PatientRecord> records;
  records.reserve(spec.n_patients);
  SyntheticData out;
  out.grid.assign(grid.begin(), grid.end());
  out.truth.modes = spec.modes;
  out.truth.latent.assign(J, {});
  std::uniform_int_distribution<std::size_t> pick(0, spec.covariate_pool.empty() ? 0 : spec.covariate_pool.size() - 1);

  for (std::size_t i = 0; i < spec.n_patients; ++i) {
    PatientRecord rec;
    rec.covariates = spec.covariates == CovariateSource::Resample ? spec.covariate_pool[pick(rng)]
                                                                  : standard_normal_row(V, rng);
    const std::vector<ExtendedTime> times = draw_mode_times(spec.modes, rec.covariates, rng);
    double censor = spec.horizon;
    if (spec.censor_rate > 0.0) censor = std::min(censor, -std::log(uniform_open(rng)) / spec.censor_rate);
    double first = kInf;
    int cause = 0;
    for (std::size_t j = 0; j < J; ++j) {
      if (times[j].is_finite() && times[j].value() < first) {
        first = times[j].value();
        cause = static_cast<int>(j) + 1;
      }
    }
    if (first <= censor) {
      rec.time = first;
      rec.censored = false;
    } else {
      rec.time = censor;
      rec.censored = true;
      cause = 0;
    }
    out.truth.cause.push_back(cause);
    for (std::size_t j = 0; j < J; ++j) out.truth.latent[j].push_back(times[j]);
    if (!grid.empty()) {
      ModeSummary c = curves_for(spec.modes, rec.covariates, grid);
      out.true_survival.push_back(std::move(c.survival));
      out.true_hazard.push_back(std::move(c.hazard));
    }
    records.push_back(std::move(rec));
  }
  out.data = Dataset(records, V);
  return out;
}

SyntheticSpec planted_signal_spec(std::size_t n_patients) {
  SyntheticSpec spec;
  spec.n_patients = n_patients;
  spec.modes.push_back({1.5, 2.0, 1.0 / 200.0, {1.5, -1.5, 1.0, 0.0}});
  return spec;
}

SyntheticSpec null_signal_spec(std::size_t n_patients, std::size_t n_noise, double rate) {
  SyntheticSpec spec;
  spec.n_patients = n_patients;
  ModeParams mode{1.0, 1.0, rate, std::vector<double>(n_noise + 1, 0.0)};
  // p = 1 / (1 + e^-40) is 1 to double precision.
  mode.beta.back() = -40.0;
  spec.modes.push_back(std::move(mode));
  return spec;
}

RawTable to_raw_table(const Dataset& data) {
  RawTable table;
  const std::size_t V = data.n_covariates();
  for (std::size_t v = 0; v + 1 < V; ++v) table.covariate_names.push_back("x" + std::to_string(v + 1));
  for (const PatientRecord& rec : data.records()) {
    table.rows.emplace_back(rec.covariates.begin(), rec.covariates.end() - 1);
    table.time.push_back(rec.time);
    table.censored.push_back(rec.censored ? 1 : 0);
  }
  return table;
}

std::vector<double> default_calibration_grid() {
  std::vector<double> grid(20);
  for (int g = 0; g < 20; ++g) grid[static_cast<std::size_t>(g)] = 10.0 * std::pow(100.0, g / 19.0);
  return grid;
}

CalibrationReport calibration_run(const CalibrationConfig& config, const Prior& prior, std::uint64_t seed) {
  if (config.n_replications < 1) throw UsageError("BAD_PARAM", "calibration needs at least one replication");
  if (config.n_covariates < 1) throw UsageError("BAD_PARAM", "need at least the constant covariate");
  if (!config.truth_from_prior && config.fixed_modes.empty()) {
    throw UsageError("BAD_PARAM", "fixed-truth calibration needs modes");
  }
  config.schedule.validate();
  CalibrationReport report;
  report.grid = config.grid.empty() ? default_calibration_grid() : config.grid;
  const std::size_t G = report.grid.size();
  const std::size_t R = static_cast<std::size_t>(config.n_replications);
  report.replications.resize(R);
  std::vector<std::exception_ptr> errors(R);

  auto replicate = [&](std::size_t rep) {
    ReplicationCoverage& cov = report.replications[rep];
    cov.seed = derive_seed(seed, rep);
    Rng rng(cov.seed);
    SyntheticSpec spec;
    spec.n_patients = config.n_patients;
    spec.horizon = config.horizon;
    spec.censor_rate = config.censor_rate;
    spec.modes = config.truth_from_prior ? prior.sample_state(config.n_covariates, rng).modes : config.fixed_modes;
    cov.J_true = static_cast<int>(spec.modes.size());
    const SyntheticData synth = generate(spec, {}, rng);
    const std::vector<double> held_out = standard_normal_row(config.n_covariates, rng);
    const ModeSummary truth = curves_for(spec.modes, held_out, report.grid);

    const ChainResult chain = run_chain(synth.data, prior, config.schedule, rng);
    const std::size_t S = chain.records.size();
    std::vector<std::vector<double>> surv(G, std::vector<double>(S)), haz(G, std::vector<double>(S));
    double J_sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const ModelState& st = chain.records[s].state;
      J_sum += static_cast<double>(st.J());
      const ModeSummary c = curves_for(st.modes, held_out, report.grid);
      for (std::size_t g = 0; g < G; ++g) {
        surv[g][s] = c.survival[g];
        haz[g][s] = c.hazard[g];
      }
    }
    cov.mean_J_posterior = S ? J_sum / static_cast<double>(S) : 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      std::sort(surv[g].begin(), surv[g].end());
      const double lo = quantile_sorted(surv[g], 0.025);
      const double hi = quantile_sorted(surv[g], 0.975);
      ++cov.survival_cells;
      if (truth.survival[g] >= lo && truth.survival[g] <= hi) ++cov.survival_inside;
      if (!std::isfinite(truth.hazard[g])) continue;
      std::vector<double>& h = haz[g];
      for (double& v : h) {
        if (std::isnan(v)) v = kInf;
      }
      std::sort(h.begin(), h.end());
      const double hlo = quantile_sorted(h, 0.025);
      const double hhi = quantile_sorted(h, 0.975);
      ++cov.hazard_cells;
      if (truth.hazard[g] >= hlo && truth.hazard[g] <= hhi) ++cov.hazard_inside;
    }
  };

  const std::size_t workers = std::min<std::size_t>(
      R, static_cast<std::size_t>(config.n_threads > 0 ? config.n_threads : default_thread_count()));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t rep = next++; rep < R; rep = next++) {
      try {
        replicate(rep);
      } catch (...) {
        errors[rep] = std::current_exception();
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

  int s_in = 0, h_in = 0;
  for (const ReplicationCoverage& c : report.replications) {
    s_in += c.survival_inside;
    report.survival_cells += c.survival_cells;
    h_in += c.hazard_inside;
    report.hazard_cells += c.hazard_cells;
  }
  report.survival_coverage = report.survival_cells ? static_cast<double>(s_in) / report.survival_cells : 0.0;
  report.hazard_coverage = report.hazard_cells ? static_cast<double>(h_in) / report.hazard_cells : 0.0;
  return report;
}

}  // namespace gpm
