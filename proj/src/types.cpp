#include "gpm/types.hpp"

#include <cmath>
#include <sstream>

#include "gpm/error.hpp"

namespace gpm {

ExtendedTime ExtendedTime::finite(double days) {
  if (!(days > 0.0) || !std::isfinite(days)) {
    throw NumericalError("BAD_TIME", "finite latent time must be positive, got " + std::to_string(days));
  }
  return ExtendedTime(true, days);
}

void ModeParams::validate(std::size_t n_covariates) const {
  if (!(k != 0.0) || !std::isfinite(k)) throw NumericalError("BAD_PARAM", "mode parameter k must be finite and nonzero");
  if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("BAD_PARAM", "mode parameter m must be positive");
  if (!(r > 0.0) || !std::isfinite(r)) throw NumericalError("BAD_PARAM", "mode parameter r must be positive");
  if (beta.size() != n_covariates) {
    throw NumericalError("BAD_PARAM", "beta has " + std::to_string(beta.size()) + " entries, expected " +
                                          std::to_string(n_covariates));
  }
  for (double b : beta) {
    if (!std::isfinite(b)) throw NumericalError("BAD_PARAM", "beta entries must be finite");
  }
}

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw UsageError("BAD_HYPERPARAMS", what); };
  if (!(alpha_J >= 0.0 && alpha_J < 1.0)) fail("alpha_J must lie in [0, 1)");
  if (!(gamma > 0.0)) fail("gamma must be positive");
  if (!(a_m > 0.0) || !(b_m > 0.0)) fail("a_m and b_m must be positive");
  if (!(m_r > 0.0) || !(r_r > 0.0)) fail("m_r and r_r must be positive");
  if (!(a_k > 0.0)) fail("a_k must be positive");
  if (b_k.empty() || b_k.size() != c_k.size()) fail("b_k and c_k must be nonempty and of equal length");
  for (std::size_t n = 0; n < b_k.size(); ++n) {
    if (!(b_k[n] > 0.0) || !(c_k[n] > 0.0)) fail("b_k and c_k entries must be positive");
  }
  if (max_modes < 0) fail("max_modes must be nonnegative");
}

void PatientRecord::validate() const {
  if (!(time > 0.0) || !std::isfinite(time)) {
    throw DataError("BAD_TIME", "observed time must be positive and finite");
  }
  if (covariates.empty()) throw DataError("BAD_COVARIATES", "patient has no covariates (constant column missing)");
  for (double c : covariates) {
    if (!std::isfinite(c)) throw DataError("BAD_COVARIATES", "covariates must be finite");
  }
  if (covariates.back() != 1.0) throw DataError("BAD_COVARIATES", "last covariate must be the constant 1");
}

Dataset::Dataset(std::span<const PatientRecord> records, std::size_t n_covariates)
    : n_covariates_(n_covariates), records_(records.begin(), records.end()) {
  const std::size_t n = records_.size();
  columns_.assign(n * n_covariates_, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    records_[i].validate();
    if (records_[i].covariates.size() != n_covariates_) {
      throw DataError("BAD_COVARIATES", "patient " + std::to_string(i) + " has " +
                                            std::to_string(records_[i].covariates.size()) +
                                            " covariates, expected " + std::to_string(n_covariates_));
    }
    for (std::size_t v = 0; v < n_covariates_; ++v) columns_[v * n + i] = records_[i].covariates[v];
  }
}

Dataset::Dataset(std::span<const PatientRecord> records)
    : Dataset(records, records.empty() ? 0 : records.front().covariates.size()) {}

void check_state_invariants(const ModelState& state, const Dataset& data) {
  const std::size_t J = state.J();
  auto fail = [](const std::string& what) { throw NumericalError("STATE_INVARIANT", what); };
  if (J == 0) fail("state has no modes");
  if (state.cause.size() != data.size()) fail("cause vector length differs from patient count");
  if (state.latent.size() != J) fail("latent table has wrong number of modes");
  for (std::size_t j = 0; j < J; ++j) {
    if (state.latent[j].size() != data.size()) fail("latent column length differs from patient count");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int c = state.cause[i];
    const double t = data.time(i);
    std::ostringstream where;
    where << "patient " << i << ": ";
    if (data.censored(i)) {
      if (c != 0) fail(where.str() + "censored patient has nonzero cause");
      for (std::size_t j = 0; j < J; ++j) {
        if (!state.latent[j][i].exceeds(t)) fail(where.str() + "latent time not beyond censoring time");
      }
    } else {
      if (c < 1 || c > static_cast<int>(J)) fail(where.str() + "uncensored patient has cause out of range");
      for (std::size_t j = 0; j < J; ++j) {
        const ExtendedTime& x = state.latent[j][i];
        if (static_cast<int>(j) + 1 == c) {
          if (!x.is_finite() || x.value() != t) fail(where.str() + "cause latent time differs from observed time");
        } else if (!x.exceeds(t)) {
          fail(where.str() + "non-cause latent time not beyond observed time");
        }
      }
    }
  }
}

}  // namespace gpm
