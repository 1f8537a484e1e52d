#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gpm/engine.hpp"
#include "gpm/prediction.hpp"
#include "gpm/standardize.hpp"
#include "gpm/synthetic.hpp"

namespace gpm {

inline constexpr double kDaysPerMonth = 30.4375;
inline constexpr int kChainFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

enum class TimeUnit { Days, Months };
TimeUnit parse_time_unit(const std::string& name);
std::string time_unit_name(TimeUnit unit);

std::string read_file(const std::string& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::uint64_t digest);

/// CSV with a header row. Required columns `time` and `censored` (0/1);
/// every other column is a covariate. Times are converted to days.
RawTable parse_raw_table(std::string_view text, TimeUnit unit = TimeUnit::Days);
RawTable read_raw_table(const std::string& path, TimeUnit unit = TimeUnit::Days);
std::string format_raw_table(const RawTable& table);

/// Rows of the named columns, in the order given, from a CSV with a header.
/// Extra columns are ignored.
std::vector<std::vector<double>> parse_covariate_rows(std::string_view text, const std::vector<std::string>& names);

/// Column indices for the named covariates; all covariates when `names` is empty.
std::vector<std::size_t> resolve_subset(const RawTable& table, const std::vector<std::string>& names);

struct Ingested {
  RawTable table;
  std::vector<std::size_t> subset;
  StandardizationRecord record;
  Dataset dataset;
  std::uint64_t digest = 0;  // of the file bytes
};

/// Reads, selects the subset, standardizes over the whole file and appends
/// the constant column.
Ingested ingest(const std::string& path, const std::vector<std::string>& subset, TimeUnit unit = TimeUnit::Days);

struct ChainFileHeader {
  int format_version = kChainFormatVersion;
  Hyperparams hyper;
  AnnealSchedule schedule;
  std::uint64_t seed = 0;
  std::string dataset_digest;
  std::string time_unit = "days";
  StandardizationRecord standardization;
};

struct ChainFile {
  ChainFileHeader header;
  std::vector<ChainRecord> records;
};

/// JSON Lines: one header object, then one object per record.
std::string serialize_chain(const ChainFile& chain);
ChainFile parse_chain(std::string_view text);
void write_chain_file(const std::string& path, const ChainFile& chain);
ChainFile read_chain_file(const std::string& path);
/// Throws DataError DIGEST_MISMATCH when the chain was fitted to other data.
void check_digest(const ChainFile& chain, std::uint64_t digest);

std::string serialize_report(const AsiReport& report);
AsiReport parse_report(std::string_view text);
void write_report_file(const std::string& path, const AsiReport& report);
AsiReport read_report_file(const std::string& path);

std::string method_name(MeanAsiMethod method);
MeanAsiMethod parse_method(const std::string& name);

/// Minimal CSV emitter; values are written with round-trip precision.
std::string format_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);
std::string format_double(double value);

/// SVG views of numbers that are always emitted as CSV too.
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
  std::string colour = "#1f77b4";
  double opacity = 1.0;
  double width = 1.5;
  bool dashed = false;
};

struct SvgAxes {
  std::string title, x_label, y_label;
  bool log_x = false;
  bool log_y = false;
};

std::string svg_lines(const SvgAxes& axes, const std::vector<SvgSeries>& series);
/// Bars at integer positions.
std::string svg_bars(const SvgAxes& axes, const std::vector<double>& x, const std::vector<double>& heights);
std::string svg_histogram(const SvgAxes& axes, const std::vector<double>& values, int n_bins,
                          const std::vector<SvgSeries>& overlay = {});

}  // namespace gpm
