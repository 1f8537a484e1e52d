#include "gpm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gpm/error.hpp"
#include "json.hpp"

namespace gpm {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  std::string out(s.substr(a, b - a));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i < line.size() && line[i] == '"') quoted = !quoted;
    if (i == line.size() || (line[i] == ',' && !quoted)) {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double parse_number(const std::string& cell, const std::string& column, std::size_t line_no) {
  if (cell.empty()) {
    throw DataError("MISSING_VALUE", "line " + std::to_string(line_no) + ": empty cell in column '" + column + "'");
  }
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError("NON_NUMERIC", "line " + std::to_string(line_no) + ": cannot parse '" + cell + "' in column '" +
                                       column + "'");
  }
  return v;
}

json hyper_to_json(const Hyperparams& h) {
  return {{"alpha_J", h.alpha_J}, {"gamma", h.gamma}, {"a_m", h.a_m},     {"b_m", h.b_m},
          {"m_r", h.m_r},         {"r_r", h.r_r},     {"a_k", h.a_k},     {"b_k", h.b_k},
          {"c_k", h.c_k},         {"max_modes", h.max_modes}};
}

Hyperparams hyper_from_json(const json& j) {
  Hyperparams h;
  h.alpha_J = j.at("alpha_J").get<double>();
  h.gamma = j.at("gamma").get<double>();
  h.a_m = j.at("a_m").get<double>();
  h.b_m = j.at("b_m").get<double>();
  h.m_r = j.at("m_r").get<double>();
  h.r_r = j.at("r_r").get<double>();
  h.a_k = j.at("a_k").get<double>();
  h.b_k = j.at("b_k").get<std::vector<double>>();
  h.c_k = j.at("c_k").get<std::vector<double>>();
  h.max_modes = j.at("max_modes").get<int>();
  return h;
}

json schedule_to_json(const AnnealSchedule& s) {
  return {{"n_anneal", s.n_anneal},
          {"n_total", s.n_total},
          {"n_discard", s.n_discard},
          {"logit_lo", s.logit_lo},
          {"logit_hi", s.logit_hi}};
}

AnnealSchedule schedule_from_json(const json& j) {
  AnnealSchedule s;
  s.n_anneal = j.at("n_anneal").get<int>();
  s.n_total = j.at("n_total").get<int>();
  s.n_discard = j.at("n_discard").get<int>();
  s.logit_lo = j.at("logit_lo").get<double>();
  s.logit_hi = j.at("logit_hi").get<double>();
  return s;
}

json standardization_to_json(const StandardizationRecord& r) {
  return {{"names", r.names}, {"mean", r.mean}, {"sd", r.sd}, {"constant_appended", r.constant_appended}};
}

StandardizationRecord standardization_from_json(const json& j) {
  StandardizationRecord r;
  r.names = j.at("names").get<std::vector<std::string>>();
  r.mean = j.at("mean").get<std::vector<double>>();
  r.sd = j.at("sd").get<std::vector<double>>();
  r.constant_appended = j.at("constant_appended").get<bool>();
  if (r.mean.size() != r.names.size() || r.sd.size() != r.names.size()) {
    throw DataError("BAD_CHAIN_FILE", "standardization record has inconsistent lengths");
  }
  return r;
}

json record_to_json(const ChainRecord& rec) {
  json modes = json::array();
  for (const ModeParams& m : rec.state.modes) {
    modes.push_back({{"k", m.k}, {"m", m.m}, {"r", m.r}, {"beta", m.beta}});
  }
  json out = {{"sample", rec.sweep_index}, {"t", rec.coolness}, {"J", rec.state.J()}, {"modes", modes}};
  if (rec.burn_in) out["burn_in"] = true;
  return out;
}

ChainRecord record_from_json(const json& j) {
  ChainRecord rec;
  rec.sweep_index = j.at("sample").get<int>();
  rec.coolness = j.at("t").get<double>();
  rec.burn_in = j.contains("burn_in") && j.at("burn_in").get<bool>();
  for (const json& m : j.at("modes")) {
    ModeParams p;
    p.k = m.at("k").get<double>();
    p.m = m.at("m").get<double>();
    p.r = m.at("r").get<double>();
    p.beta = m.at("beta").get<std::vector<double>>();
    rec.state.modes.push_back(std::move(p));
  }
  if (j.at("J").get<std::size_t>() != rec.state.J()) throw DataError("BAD_CHAIN_FILE", "record J disagrees with its modes");
  return rec;
}

template <class F>
auto parse_guard(const std::string& code, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw DataError(code, e.what());
  }
}

}  // namespace

TimeUnit parse_time_unit(const std::string& name) {
  if (name == "days") return TimeUnit::Days;
  if (name == "months") return TimeUnit::Months;
  throw UsageError("BAD_TIME_UNIT", "time unit must be 'days' or 'months', got '" + name + "'");
}

std::string time_unit_name(TimeUnit unit) { return unit == TimeUnit::Days ? "days" : "months"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("FILE_NOT_FOUND", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(std::hash<std::string>{}(path) % 100000);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("WRITE_FAILED", "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("WRITE_FAILED", "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("WRITE_FAILED", "cannot rename onto '" + path + "': " + ec.message());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

RawTable parse_raw_table(std::string_view text, TimeUnit unit) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!trim(line).empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw DataError("EMPTY_DATASET", "dataset has no header row");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  int time_col = -1, cens_col = -1;
  RawTable table;
  std::vector<std::size_t> cov_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "time") {
      time_col = static_cast<int>(c);
    } else if (header[c] == "censored") {
      cens_col = static_cast<int>(c);
    } else {
      if (header[c].empty()) throw DataError("BAD_HEADER", "empty column name in header");
      table.covariate_names.push_back(header[c]);
      cov_cols.push_back(c);
    }
  }
  if (time_col < 0) throw DataError("MISSING_COLUMN", "required column 'time' not found");
  if (cens_col < 0) throw DataError("MISSING_COLUMN", "required column 'censored' not found");
  const double scale = unit == TimeUnit::Months ? kDaysPerMonth : 1.0;

  for (std::size_t l = 1; l < lines.size(); ++l) {
    const std::size_t line_no = l + 1;
    const std::vector<std::string> cells = split_csv_line(lines[l]);
    if (cells.size() != header.size()) {
      throw DataError("BAD_ROW", "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                     " cells, found " + std::to_string(cells.size()));
    }
    const double t = parse_number(cells[static_cast<std::size_t>(time_col)], "time", line_no);
    if (!(t > 0.0)) throw DataError("BAD_TIME", "line " + std::to_string(line_no) + ": time must be positive");
    const double c = parse_number(cells[static_cast<std::size_t>(cens_col)], "censored", line_no);
    if (c != 0.0 && c != 1.0) {
      throw DataError("BAD_CENSORING", "line " + std::to_string(line_no) + ": censored must be 0 or 1");
    }
    std::vector<double> row;
    row.reserve(cov_cols.size());
    for (std::size_t q = 0; q < cov_cols.size(); ++q) {
      row.push_back(parse_number(cells[cov_cols[q]], table.covariate_names[q], line_no));
    }
    table.rows.push_back(std::move(row));
    table.time.push_back(t * scale);
    table.censored.push_back(c == 1.0 ? 1 : 0);
  }
  return table;
}

RawTable read_raw_table(const std::string& path, TimeUnit unit) { return parse_raw_table(read_file(path), unit); }

std::string format_raw_table(const RawTable& table) {
  std::ostringstream out;
  for (const std::string& name : table.covariate_names) out << name << ',';
  out << "time,censored\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (double v : table.rows[i]) out << format_double(v) << ',';
    out << format_double(table.time[i]) << ',' << (table.censored[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

std::vector<std::vector<double>> parse_covariate_rows(std::string_view text, const std::vector<std::string>& names) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!trim(line).empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw DataError("EMPTY_DATASET", "covariate file has no header row");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  std::vector<std::size_t> cols;
  for (const std::string& n : names) {
    const auto it = std::find(header.begin(), header.end(), n);
    if (it == header.end()) throw DataError("MISSING_COLUMN", "column '" + n + "' not found");
    cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const std::vector<std::string> cells = split_csv_line(lines[l]);
    if (cells.size() != header.size()) {
      throw DataError("BAD_ROW", "line " + std::to_string(l + 1) + ": expected " + std::to_string(header.size()) +
                                     " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (std::size_t q = 0; q < cols.size(); ++q) row.push_back(parse_number(cells[cols[q]], names[q], l + 1));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::size_t> resolve_subset(const RawTable& table, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  if (names.empty()) {
    for (std::size_t v = 0; v < table.covariate_names.size(); ++v) out.push_back(v);
    return out;
  }
  for (const std::string& n : names) {
    const std::size_t idx = table.column_index(n);
    if (std::find(out.begin(), out.end(), idx) != out.end()) throw UsageError("DUPLICATE_COLUMN", "column '" + n + "' listed twice");
    out.push_back(idx);
  }
  return out;
}

Ingested ingest(const std::string& path, const std::vector<std::string>& subset, TimeUnit unit) {
  Ingested out;
  const std::string bytes = read_file(path);
  out.digest = fnv1a64(bytes);
  out.table = parse_raw_table(bytes, unit);
  if (out.table.size() == 0) throw DataError("EMPTY_DATASET", "dataset '" + path + "' has no patients");
  out.subset = resolve_subset(out.table, subset);
  out.record = fit_standardization(out.table, out.subset);
  out.dataset = standardized_dataset(out.table, out.subset, out.record);
  return out;
}

std::string serialize_chain(const ChainFile& chain) {
  const ChainFileHeader& h = chain.header;
  json header = {{"format", "gpmsurv-chain"},
                 {"format_version", h.format_version},
                 {"hyperparameters", hyper_to_json(h.hyper)},
                 {"schedule", schedule_to_json(h.schedule)},
                 {"seed", h.seed},
                 {"dataset_digest", h.dataset_digest},
                 {"time_unit", h.time_unit},
                 {"standardization", standardization_to_json(h.standardization)},
                 {"n_records", chain.records.size()}};
  std::string out = header.dump();
  out += '\n';
  for (const ChainRecord& rec : chain.records) {
    out += record_to_json(rec).dump();
    out += '\n';
  }
  return out;
}

ChainFile parse_chain(std::string_view text) {
  return parse_guard("BAD_CHAIN_FILE", [&]() {
    ChainFile chain;
    std::size_t start = 0;
    bool have_header = false;
    std::size_t expected = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      const std::string_view line = text.substr(start, end - start);
      start = end + 1;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != "gpmsurv-chain") throw DataError("BAD_CHAIN_FILE", "not a chain file");
        ChainFileHeader& h = chain.header;
        h.format_version = j.at("format_version").get<int>();
        if (h.format_version != kChainFormatVersion) {
          throw DataError("BAD_CHAIN_VERSION", "unsupported chain format version " + std::to_string(h.format_version));
        }
        h.hyper = hyper_from_json(j.at("hyperparameters"));
        h.schedule = schedule_from_json(j.at("schedule"));
        h.seed = j.at("seed").get<std::uint64_t>();
        h.dataset_digest = j.at("dataset_digest").get<std::string>();
        h.time_unit = j.at("time_unit").get<std::string>();
        h.standardization = standardization_from_json(j.at("standardization"));
        expected = j.at("n_records").get<std::size_t>();
        have_header = true;
      } else {
        chain.records.push_back(record_from_json(j));
      }
    }
    if (!have_header) throw DataError("BAD_CHAIN_FILE", "chain file is empty");
    if (chain.records.size() != expected) {
      throw DataError("TRUNCATED_CHAIN_FILE", "expected " + std::to_string(expected) + " records, found " +
                                                  std::to_string(chain.records.size()));
    }
    return chain;
  });
}

void write_chain_file(const std::string& path, const ChainFile& chain) { write_file_atomic(path, serialize_chain(chain)); }

ChainFile read_chain_file(const std::string& path) { return parse_chain(read_file(path)); }

void check_digest(const ChainFile& chain, std::uint64_t digest) {
  if (chain.header.dataset_digest != digest_hex(digest)) {
    throw DataError("DIGEST_MISMATCH", "chain was fitted to dataset " + chain.header.dataset_digest +
                                           " but the given dataset has digest " + digest_hex(digest));
  }
}

std::string method_name(MeanAsiMethod method) {
  return method == MeanAsiMethod::BayesianBootstrap ? "bayesian-bootstrap" : "skew-student";
}

MeanAsiMethod parse_method(const std::string& name) {
  if (name == "bayesian-bootstrap" || name == "bootstrap") return MeanAsiMethod::BayesianBootstrap;
  if (name == "skew-student") return MeanAsiMethod::SkewStudent;
  throw UsageError("BAD_METHOD", "unknown mean-ASI method '" + name + "'");
}

std::string serialize_report(const AsiReport& report) {
  json samples = json::array();
  for (const AsiSample& s : report.samples) {
    samples.push_back({{"patient", s.patient}, {"asi", s.value}, {"censored", s.censored}});
  }
  json j = {{"format", "gpmsurv-asi-report"},
            {"format_version", kReportFormatVersion},
            {"units", "nats"},
            {"method", method_name(report.method)},
            {"split_seed", report.split_seed},
            {"subset", report.subset},
            {"mean", report.mean},
            {"ci_lo", report.ci_lo},
            {"ci_hi", report.ci_hi},
            {"mean_samples", report.mean_samples},
            {"samples", samples}};
  return j.dump(1) + "\n";
}

AsiReport parse_report(std::string_view text) {
  return parse_guard("BAD_REPORT_FILE", [&]() {
    const json j = json::parse(text);
    if (j.value("format", "") != "gpmsurv-asi-report") throw DataError("BAD_REPORT_FILE", "not an ASI report");
    if (j.at("format_version").get<int>() != kReportFormatVersion) {
      throw DataError("BAD_REPORT_VERSION", "unsupported report format version");
    }
    AsiReport r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.split_seed = j.at("split_seed").get<std::uint64_t>();
    r.subset = j.at("subset").get<std::vector<std::string>>();
    r.mean = j.at("mean").get<double>();
    r.ci_lo = j.at("ci_lo").get<double>();
    r.ci_hi = j.at("ci_hi").get<double>();
    r.mean_samples = j.at("mean_samples").get<std::vector<double>>();
    for (const json& s : j.at("samples")) {
      r.samples.push_back({s.at("patient").get<std::size_t>(), s.at("asi").get<double>(), s.at("censored").get<bool>()});
    }
    return r;
  });
}

void write_report_file(const std::string& path, const AsiReport& report) {
  write_file_atomic(path, serialize_report(report));
}

AsiReport read_report_file(const std::string& path) { return parse_report(read_file(path)); }

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(value);
}

std::string format_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace gpm
