#pragma once

#include <cstdint>
#include <vector>

#include "gpm/engine.hpp"
#include "gpm/prior.hpp"
#include "gpm/standardize.hpp"
#include "gpm/types.hpp"

namespace gpm {

enum class CovariateSource { StandardNormal, Resample };

/// Ground truth and data-generating settings for one synthetic dataset.
/// Every beta in `modes` has one entry per covariate, the constant last.
struct SyntheticSpec {
  std::size_t n_patients = 200;
  std::vector<ModeParams> modes;
  CovariateSource covariates = CovariateSource::StandardNormal;
  /// Rows to resample from (constant column included) for CovariateSource::Resample.
  std::vector<std::vector<double>> covariate_pool;
  /// Follow-up ends at the horizon; with censor_rate > 0 each patient is
  /// also censored at an independent exponential time.
  double horizon = 1000.0;
  double censor_rate = 0.0;

  std::size_t n_covariates() const { return modes.empty() ? 0 : modes.front().beta.size(); }
  void validate() const;
};

struct SyntheticData {
  Dataset data;
  std::vector<double> grid;
  std::vector<std::vector<double>> true_survival;  // [patient][grid]
  std::vector<std::vector<double>> true_hazard;
  /// Latent configuration that generated the data (cause and per-mode times).
  ModelState truth;
};

/// One patient's per-mode times: +inf when the mode does not fire.
std::vector<ExtendedTime> draw_mode_times(std::span<const ModeParams> modes, std::span<const double> covariates,
                                          Rng& rng);

/// Forward simulation of the model. The truth curves are evaluated on `grid`
/// analytically from the true parameters.
SyntheticData generate(const SyntheticSpec& spec, std::span<const double> grid, Rng& rng);

std::vector<double> standard_normal_row(std::size_t n_covariates, Rng& rng);

/// One mode whose activation depends on three standard-normal covariates
/// (coefficients 1.5, -1.5, 1.0, constant 0), Gamma-power timing k = 1.5,
/// m = 2, r = 1/200, follow-up 1000 days.
SyntheticSpec planted_signal_spec(std::size_t n_patients);

/// Exponential event times at `rate` for every patient regardless of the
/// `n_noise` covariates, follow-up 1000 days.
SyntheticSpec null_signal_spec(std::size_t n_patients, std::size_t n_noise = 3, double rate = 1.0 / 400.0);

/// Drops the constant column and names the rest x1, x2, ...
RawTable to_raw_table(const Dataset& data);

struct CalibrationConfig {
  std::size_t n_patients = 200;
  std::size_t n_covariates = 3;  // including the constant
  int n_replications = 20;
  std::vector<double> grid;      // defaults to 20 log-spaced points in [10, 1000] days
  double horizon = 1000.0;
  double censor_rate = 0.0;
  AnnealSchedule schedule = AnnealSchedule::desk();
  /// Draw each replication's truth from the prior; otherwise use fixed_modes.
  bool truth_from_prior = true;
  std::vector<ModeParams> fixed_modes;
  int n_threads = 0;
};

struct ReplicationCoverage {
  std::uint64_t seed = 0;
  int J_true = 0;
  int survival_inside = 0, survival_cells = 0;
  int hazard_inside = 0, hazard_cells = 0;
  double mean_J_posterior = 0.0;
};

struct CalibrationReport {
  std::vector<double> grid;
  std::vector<ReplicationCoverage> replications;
  double survival_coverage = 0.0;
  double hazard_coverage = 0.0;
  int survival_cells = 0, hazard_cells = 0;
};

std::vector<double> default_calibration_grid();

/// Fits one chain per replication and counts how often the true survival
/// and hazard of a held-out covariate row fall inside the pointwise
/// equitailed 95% posterior band. Hazard cells whose true value is not
/// finite are skipped.
CalibrationReport calibration_run(const CalibrationConfig& config, const Prior& prior, std::uint64_t seed);

}  // namespace gpm
