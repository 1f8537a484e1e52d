#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>

#include "gpm/error.hpp"
#include "gpm/io.hpp"

using namespace gpm;
namespace fs = std::filesystem;

namespace {

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / "gpm_io";
  fs::create_directories(dir);
  return (dir / name).string();
}

// Every opening element is closed in order or self-closed.
bool well_formed(const std::string& svg) {
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([a-zA-Z]+)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    } else if (m[3] != "/") {
      stack.push_back(m[2]);
    }
  }
  return stack.empty() && svg.rfind("<svg", 0) == 0;
}

ChainFile sample_chain() {
  ChainFile c;
  c.header.seed = 0xFFFFFFFFFFFFFFF1ULL;
  c.header.dataset_digest = digest_hex(fnv1a64("abc"));
  c.header.schedule = AnnealSchedule::desk();
  c.header.hyper.max_modes = 4;
  c.header.standardization = {{"age", "ldh"}, {61.25, 0.1}, {9.5, 1.0 / 3.0}, true};
  for (int s = 1; s <= 3; ++s) {
    ChainRecord r;
    r.sweep_index = s;
    r.coolness = s == 1 ? 0.0024726231566347743 : 1.0;
    r.burn_in = s == 1;
    r.state.modes.push_back({1.0 / 3.0, 2.0 + s, 1e-300, {0.1, -0.7, 1e-17}});
    if (s == 3) r.state.modes.push_back({-2.5, 0.5, 0.0123456789012345, {-1.0, 2.0, 0.3}});
    c.records.push_back(r);
  }
  return c;
}

}  // namespace

TEST(Standardization, TwoPointColumn) {
  RawTable t;
  t.covariate_names = {"a", "b"};
  t.rows = {{1.0, 5.0}, {3.0, 7.0}};
  t.time = {10.0, 20.0};
  t.censored = {0, 1};
  const std::vector<std::size_t> subset{0};
  const StandardizationRecord rec = fit_standardization(t, subset);
  EXPECT_EQ(rec.names, std::vector<std::string>{"a"});
  EXPECT_EQ(rec.mean[0], 2.0);
  EXPECT_EQ(rec.sd[0], 1.0);
  const std::vector<PatientRecord> p = standardized_records(t, subset, rec);
  EXPECT_EQ(p[0].covariates, (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(p[1].covariates, (std::vector<double>{1.0, 1.0}));
  EXPECT_TRUE(p[1].censored);
}

TEST(Standardization, ZeroVarianceNamesColumn) {
  RawTable t;
  t.covariate_names = {"flat", "b"};
  t.rows = {{4.0, 5.0}, {4.0, 7.0}, {4.0, 1.0}};
  t.time = {1.0, 2.0, 3.0};
  t.censored = {0, 0, 0};
  const std::vector<std::size_t> subset{1, 0};
  try {
    fit_standardization(t, subset);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "ZERO_VARIANCE");
    EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
  }
}

TEST(Standardization, RecordReappliesBitExact) {
  RawTable t;
  t.covariate_names = {"a", "b"};
  for (int i = 0; i < 17; ++i) {
    t.rows.push_back({std::sin(i * 1.3) * 100.0, std::exp(0.1 * i)});
    t.time.push_back(1.0 + i);
    t.censored.push_back(0);
  }
  const std::vector<std::size_t> subset{0, 1};
  const std::vector<std::size_t> train{0, 2, 4, 6, 8};
  const StandardizationRecord rec = fit_standardization(t, subset, train);
  const std::vector<PatientRecord> p = standardized_records(t, subset, rec);
  // Through the chain file header and back.
  ChainFile c = sample_chain();
  c.header.standardization = rec;
  const StandardizationRecord back = parse_chain(serialize_chain(c)).header.standardization;
  EXPECT_EQ(back, rec);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back.apply(t.rows[i]), p[i].covariates);
  }
}

TEST(Csv, ParsesAndConvertsMonths) {
  const std::string text = "age,\"ldh\",time,censored\n50, 1.5 ,2,0\n60,2.5,1.5,1\n";
  const RawTable d = parse_raw_table(text);
  EXPECT_EQ(d.covariate_names, (std::vector<std::string>{"age", "ldh"}));
  EXPECT_EQ(d.time, (std::vector<double>{2.0, 1.5}));
  EXPECT_EQ(d.rows[0][1], 1.5);
  const RawTable m = parse_raw_table(text, TimeUnit::Months);
  EXPECT_DOUBLE_EQ(m.time[0], 2.0 * 30.4375);
  EXPECT_EQ(m.censored, (std::vector<char>{0, 1}));
  EXPECT_EQ(parse_time_unit("months"), TimeUnit::Months);
  EXPECT_EQ(error_code([] { parse_time_unit("weeks"); }), "BAD_TIME_UNIT");
}

TEST(Csv, ParseErrors) {
  EXPECT_EQ(error_code([] { parse_raw_table("a,censored\n1,0\n"); }), "MISSING_COLUMN");
  EXPECT_EQ(error_code([] { parse_raw_table("a,time,censored\n1,2\n"); }), "BAD_ROW");
  EXPECT_EQ(error_code([] { parse_raw_table("a,time,censored\n1,0,0\n"); }), "BAD_TIME");
  EXPECT_EQ(error_code([] { parse_raw_table("a,time,censored\n1,-3,0\n"); }), "BAD_TIME");
  EXPECT_EQ(error_code([] { parse_raw_table("a,time,censored\n1,3,2\n"); }), "BAD_CENSORING");
  EXPECT_EQ(error_code([] { parse_raw_table("a,time,censored\nx,3,0\n"); }), "NON_NUMERIC");
  EXPECT_EQ(error_code([] { parse_raw_table("a,time,censored\n,3,0\n"); }), "MISSING_VALUE");
  EXPECT_EQ(error_code([] { parse_raw_table(""); }), "EMPTY_DATASET");
  const std::string header_only = temp_path("header_only.csv");
  write_file_atomic(header_only, "a,time,censored\n");
  EXPECT_EQ(error_code([&] { ingest(header_only, {}); }), "EMPTY_DATASET");
  EXPECT_EQ(error_code([] { read_file(temp_path("does_not_exist.csv")); }), "FILE_NOT_FOUND");
  EXPECT_EQ(error_code([] { parse_covariate_rows("a,b\n1,2\n", {"c"}); }), "MISSING_COLUMN");
}

TEST(Csv, RoundTripAndSubsets) {
  RawTable t;
  t.covariate_names = {"x1", "x2"};
  t.rows = {{0.1, 1e-20}, {-3.25, 7.0}};
  t.time = {12.5, 1.0 / 3.0};
  t.censored = {1, 0};
  const RawTable back = parse_raw_table(format_raw_table(t));
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.time, t.time);
  EXPECT_EQ(back.censored, t.censored);
  EXPECT_EQ(resolve_subset(t, {}), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(resolve_subset(t, {"x2"}), (std::vector<std::size_t>{1}));
  EXPECT_EQ(error_code([&] { resolve_subset(t, {"x2", "x2"}); }), "DUPLICATE_COLUMN");
  EXPECT_EQ(error_code([&] { resolve_subset(t, {"x3"}); }), "MISSING_COLUMN");
  const auto rows = parse_covariate_rows("x2,other,x1\n5,9,6\n", {"x1", "x2"});
  EXPECT_EQ(rows, (std::vector<std::vector<double>>{{6.0, 5.0}}));
}

TEST(Ingest, StandardizesOverWholeFileAndDigests) {
  const std::string path = temp_path("ingest.csv");
  const std::string text = "a,b,time,censored\n1,10,5,0\n3,20,6,1\n5,60,7,0\n";
  write_file_atomic(path, text);
  const Ingested in = ingest(path, {"b"});
  EXPECT_EQ(in.digest, fnv1a64(text));
  EXPECT_EQ(in.dataset.size(), 3u);
  EXPECT_EQ(in.dataset.n_covariates(), 2u);
  EXPECT_EQ(in.record.names, std::vector<std::string>{"b"});
  EXPECT_DOUBLE_EQ(in.record.mean[0], 30.0);
  EXPECT_EQ(in.dataset.patient(0).covariates.back(), 1.0);
}

TEST(ChainFileFormat, RoundTripIsByteIdentical) {
  const ChainFile c = sample_chain();
  const std::string text = serialize_chain(c);
  const ChainFile back = parse_chain(text);
  EXPECT_EQ(serialize_chain(back), text);
  ASSERT_EQ(back.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.records[i].state.modes, c.records[i].state.modes);
    EXPECT_EQ(back.records[i].burn_in, c.records[i].burn_in);
    EXPECT_EQ(back.records[i].coolness, c.records[i].coolness);
    EXPECT_EQ(back.records[i].sweep_index, c.records[i].sweep_index);
  }
  EXPECT_EQ(back.header.seed, c.header.seed);
  EXPECT_EQ(back.header.hyper, c.header.hyper);
  EXPECT_EQ(back.header.schedule, c.header.schedule);

  const std::string path = temp_path("chain.jsonl");
  write_chain_file(path, c);
  EXPECT_EQ(read_file(path), text);
  EXPECT_EQ(serialize_chain(read_chain_file(path)), text);
}

TEST(ChainFileFormat, Errors) {
  const ChainFile c = sample_chain();
  EXPECT_EQ(error_code([&] { check_digest(c, fnv1a64("abd")); }), "DIGEST_MISMATCH");
  EXPECT_NO_THROW(check_digest(c, fnv1a64("abc")));
  std::string text = serialize_chain(c);
  EXPECT_EQ(error_code([&] { parse_chain(text.substr(0, text.size() - 30)); }), "BAD_CHAIN_FILE");
  const std::string header_only = text.substr(0, text.find('\n') + 1);
  EXPECT_EQ(error_code([&] { parse_chain(header_only); }), "TRUNCATED_CHAIN_FILE");
  const std::string v2 = std::regex_replace(text, std::regex("\"format_version\":1"), "\"format_version\":2");
  EXPECT_EQ(error_code([&] { parse_chain(v2); }), "BAD_CHAIN_VERSION");
  EXPECT_EQ(error_code([] { parse_chain("not json\n"); }), "BAD_CHAIN_FILE");
}

TEST(Report, RoundTrip) {
  AsiReport r;
  r.samples = {{0, 0.25, false}, {1, -1.0 / 3.0, true}};
  r.mean_samples = {0.1, 0.2, 0.30000000000000004};
  r.mean = 0.2;
  r.ci_lo = 0.105;
  r.ci_hi = 0.295;
  r.method = MeanAsiMethod::SkewStudent;
  r.split_seed = 99;
  r.subset = {"age", "ldh"};
  const std::string text = serialize_report(r);
  const AsiReport back = parse_report(text);
  EXPECT_EQ(serialize_report(back), text);
  EXPECT_EQ(back.mean_samples, r.mean_samples);
  EXPECT_EQ(back.samples[1].value, r.samples[1].value);
  EXPECT_TRUE(back.samples[1].censored);
  EXPECT_EQ(back.method, MeanAsiMethod::SkewStudent);
  EXPECT_EQ(back.subset, r.subset);
  EXPECT_EQ(parse_method("bootstrap"), MeanAsiMethod::BayesianBootstrap);
  EXPECT_EQ(error_code([] { parse_method("jackknife"); }), "BAD_METHOD");
}

TEST(Files, AtomicWriteReplacesWholeFile) {
  const std::string path = temp_path("atomic.txt");
  write_file_atomic(path, "first version, rather long\n");
  write_file_atomic(path, "second\n");
  EXPECT_EQ(read_file(path), "second\n");
  for (const auto& e : fs::directory_iterator(fs::path(path).parent_path())) {
    EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos) << e.path();
  }
  EXPECT_EQ(error_code([] { write_file_atomic(temp_path("no_such_dir/x.txt"), "x"); }), "WRITE_FAILED");
}

TEST(Files, DigestIsStable) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(digest_hex(0xabcULL), "0000000000000abc");
}

TEST(Numbers, FormatRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e300, 0.0, 123456789.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_csv({"a", "b"}, {{1.0, 0.5}}), "a,b\n1,0.5\n");
}

TEST(Svg, WellFormedAndEscaped) {
  SvgAxes ax{"S & <T>", "days", "survival", true, false};
  const std::string lines = svg_lines(ax, {{"mean", {1, 10, 100}, {1, 0.7, 0.2}},
                                           {"band", {1, 10, 100}, {0.9, 0.5, 0.1}, "#888", 0.5, 1.0, true}});
  EXPECT_TRUE(well_formed(lines));
  EXPECT_NE(lines.find("S &amp; &lt;T&gt;"), std::string::npos);
  EXPECT_TRUE(well_formed(svg_bars({"J", "J", "p"}, {1, 2, 3}, {0.2, 0.16, 0.128})));
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(std::sin(i * 0.37));
  EXPECT_TRUE(well_formed(svg_histogram({"h", "x", "density"}, v, 20, {{"pdf", {-1, 0, 1}, {0.3, 0.4, 0.3}}})));
}

TEST(Svg, DoesNotAlterCsv) {
  const std::vector<std::vector<double>> rows{{1.0, 0.5}, {2.0, 0.25}};
  const std::string before = format_csv({"t", "s"}, rows);
  svg_lines({"t", "x", "y"}, {{"s", {1.0, 2.0}, {0.5, 0.25}}});
  EXPECT_EQ(format_csv({"t", "s"}, rows), before);
}
