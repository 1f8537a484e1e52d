#pragma once

#include <span>
#include <string>
#include <vector>

#include "gpm/types.hpp"

namespace gpm {

/// Dataset as read from disk: raw covariate values, no constant column.
struct RawTable {
  std::vector<std::string> covariate_names;
  std::vector<std::vector<double>> rows;  // [patient][covariate]
  std::vector<double> time;               // days
  std::vector<char> censored;

  std::size_t size() const { return time.size(); }
  /// Column index by name; throws DataError MISSING_COLUMN.
  std::size_t column_index(const std::string& name) const;
};

/// Per-covariate shift and scale; the constant column is appended after the
/// standardized covariates.
struct StandardizationRecord {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> sd;  // population convention
  bool constant_appended = true;

  std::size_t n_covariates() const { return names.size() + (constant_appended ? 1 : 0); }
  /// `raw` holds the values of `names` in order.
  std::vector<double> apply(std::span<const double> raw) const;
  friend bool operator==(const StandardizationRecord&, const StandardizationRecord&) = default;
};

/// Mean and population standard deviation of the chosen columns over the
/// given rows (all rows when `rows` is empty). Throws DataError
/// ZERO_VARIANCE naming a constant column.
StandardizationRecord fit_standardization(const RawTable& table, std::span<const std::size_t> subset,
                                          std::span<const std::size_t> rows = {});

std::vector<double> select_columns(const std::vector<double>& row, std::span<const std::size_t> subset);

/// Standardized patients for the given rows (all rows when empty).
std::vector<PatientRecord> standardized_records(const RawTable& table, std::span<const std::size_t> subset,
                                                const StandardizationRecord& record,
                                                std::span<const std::size_t> rows = {});
Dataset standardized_dataset(const RawTable& table, std::span<const std::size_t> subset,
                             const StandardizationRecord& record, std::span<const std::size_t> rows = {});

}  // namespace gpm
