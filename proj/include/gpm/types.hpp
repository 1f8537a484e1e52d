#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gpm {

/// A time on (0, +inf]. Infinity is an explicit tag: a mode that never fires
/// carries probability mass rather than a density, and must never reach
/// floating-point arithmetic as a sentinel value.
class ExtendedTime {
 public:
  static ExtendedTime infinite() { return ExtendedTime(false, 0.0); }
  static ExtendedTime finite(double days);

  bool is_finite() const { return finite_; }
  bool is_infinite() const { return !finite_; }
  /// Only meaningful for finite times.
  double value() const { return value_; }

  /// Strict ordering on the extended half line (+inf exceeds every finite value).
  bool exceeds(double t) const { return !finite_ || value_ > t; }

  friend bool operator==(const ExtendedTime& a, const ExtendedTime& b) {
    return a.finite_ == b.finite_ && (!a.finite_ || a.value_ == b.value_);
  }

 private:
  ExtendedTime(bool finite, double value) : finite_(finite), value_(value) {}
  bool finite_;
  double value_;
};

/// Parameters of one mode of death. `beta` holds one coefficient per
/// covariate including the constant column.
struct ModeParams {
  double k = 1.0;  // power exponent, nonzero
  double m = 1.0;  // shape, > 0
  double r = 0.01; // inverse timescale, 1/days
  std::vector<double> beta;

  void validate(std::size_t n_covariates) const;
  friend bool operator==(const ModeParams&, const ModeParams&) = default;
};

/// Fixed prior constants. Defaults are the published values.
struct Hyperparams {
  double alpha_J = 0.8;
  double gamma = 1.0;
  double a_m = 1.0;
  double b_m = 1.0;
  double m_r = 0.5;
  double r_r = 30.0;  // days
  double a_k = 1.0;
  std::vector<double> b_k{0.2, 0.2};
  std::vector<double> c_k{0.5, 0.5};
  /// Optional cap on the number of modes (0 = unbounded). With a cap the
  /// geometric prior on J is truncated and renormalized.
  int max_modes = 0;

  int N_k() const { return static_cast<int>(b_k.size()); }
  void validate() const;
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct PatientRecord {
  std::vector<double> covariates;  // standardized; last entry is the constant 1
  double time = 0.0;               // days
  bool censored = false;

  void validate() const;
};

/// Patients with covariates stored column-major so per-covariate sweeps over
/// patients are contiguous.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t n_covariates) : n_covariates_(n_covariates) {}
  Dataset(std::span<const PatientRecord> records, std::size_t n_covariates);
  explicit Dataset(std::span<const PatientRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t n_covariates() const { return n_covariates_; }

  const PatientRecord& patient(std::size_t i) const { return records_[i]; }
  const std::vector<PatientRecord>& records() const { return records_; }
  double time(std::size_t i) const { return records_[i].time; }
  bool censored(std::size_t i) const { return records_[i].censored; }
  std::span<const double> column(std::size_t v) const {
    return {columns_.data() + v * records_.size(), records_.size()};
  }

 private:
  std::size_t n_covariates_ = 0;
  std::vector<PatientRecord> records_;
  std::vector<double> columns_;
};

/// Full sampler state. cause[i] is 0 for censored patients and j + 1 when
/// mode j (zero-based) caused the observed death. latent[j][i] is the time at
/// which mode j would have killed patient i.
struct ModelState {
  std::vector<ModeParams> modes;
  std::vector<int> cause;
  std::vector<std::vector<ExtendedTime>> latent;

  std::size_t J() const { return modes.size(); }
  bool has_latents() const { return !latent.empty(); }
  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Throws gpm::Error describing the first violated invariant of the latent
/// configuration (cause labels vs censoring, latent times vs observed times).
void check_state_invariants(const ModelState& state, const Dataset& data);

}  // namespace gpm
