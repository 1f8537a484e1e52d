#include "gpm/standardize.hpp"

#include <cmath>
#include <numeric>

#include "gpm/error.hpp"

namespace gpm {
namespace {

std::vector<std::size_t> all_rows(const RawTable& table, std::span<const std::size_t> rows) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  std::vector<std::size_t> out(table.size());
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

}  // namespace

std::size_t RawTable::column_index(const std::string& name) const {
  for (std::size_t v = 0; v < covariate_names.size(); ++v) {
    if (covariate_names[v] == name) return v;
  }
  throw DataError("MISSING_COLUMN", "column '" + name + "' not found");
}

std::vector<double> StandardizationRecord::apply(std::span<const double> raw) const {
  if (raw.size() != names.size()) {
    throw DataError("BAD_COVARIATES", "expected " + std::to_string(names.size()) + " covariates, got " +
                                          std::to_string(raw.size()));
  }
  std::vector<double> out(n_covariates(), 1.0);
  for (std::size_t v = 0; v < names.size(); ++v) out[v] = (raw[v] - mean[v]) / sd[v];
  return out;
}

std::vector<double> select_columns(const std::vector<double>& row, std::span<const std::size_t> subset) {
  std::vector<double> out;
  out.reserve(subset.size());
  for (std::size_t v : subset) {
    if (v >= row.size()) throw DataError("MISSING_COLUMN", "covariate index out of range");
    out.push_back(row[v]);
  }
  return out;
}

StandardizationRecord fit_standardization(const RawTable& table, std::span<const std::size_t> subset,
                                          std::span<const std::size_t> rows) {
  const std::vector<std::size_t> idx = all_rows(table, rows);
  if (idx.empty()) throw DataError("EMPTY_DATASET", "cannot standardize an empty dataset");
  StandardizationRecord rec;
  for (std::size_t v : subset) {
    if (v >= table.covariate_names.size()) throw DataError("MISSING_COLUMN", "covariate index out of range");
    double sum = 0.0;
    for (std::size_t i : idx) sum += table.rows[i][v];
    const double mu = sum / static_cast<double>(idx.size());
    double ss = 0.0;
    for (std::size_t i : idx) ss += (table.rows[i][v] - mu) * (table.rows[i][v] - mu);
    const double sd = std::sqrt(ss / static_cast<double>(idx.size()));
    if (!(sd > 0.0)) {
      throw DataError("ZERO_VARIANCE", "covariate '" + table.covariate_names[v] + "' is constant");
    }
    rec.names.push_back(table.covariate_names[v]);
    rec.mean.push_back(mu);
    rec.sd.push_back(sd);
  }
  return rec;
}

std::vector<PatientRecord> standardized_records(const RawTable& table, std::span<const std::size_t> subset,
                                                const StandardizationRecord& record,
                                                std::span<const std::size_t> rows) {
  std::vector<PatientRecord> out;
  for (std::size_t i : all_rows(table, rows)) {
    PatientRecord p;
    p.covariates = record.apply(select_columns(table.rows[i], subset));
    p.time = table.time[i];
    p.censored = table.censored[i] != 0;
    out.push_back(std::move(p));
  }
  return out;
}

Dataset standardized_dataset(const RawTable& table, std::span<const std::size_t> subset,
                             const StandardizationRecord& record, std::span<const std::size_t> rows) {
  const std::vector<PatientRecord> recs = standardized_records(table, subset, record, rows);
  return Dataset(recs, record.n_covariates());
}

}  // namespace gpm
