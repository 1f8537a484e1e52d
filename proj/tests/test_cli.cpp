#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <algorithm>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "gpm/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::path(::testing::TempDir()) / "gpm_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string at(const std::string& name) { return (workdir() / name).string(); }

struct Outcome {
  int exit_code = -1;
  std::string err;
  std::string out;
};

Outcome run(const std::string& args) {
  static int counter = 0;
  const std::string out = at("stdout_" + std::to_string(counter));
  const std::string err = at("stderr_" + std::to_string(counter++));
  const std::string cmd = std::string(GPMSURV_BINARY) + " " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  Outcome r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = gpm::read_file(out);
  r.err = gpm::read_file(err);
  return r;
}

const std::string kShortFit = " --n-anneal 20 --n-total 120 --n-discard 40";

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const Outcome r = run("simulate --scenario planted --n 60 --seed 3 --out " + at("d.csv") + " --truth " +
                      at("truth.csv"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
};

}  // namespace

TEST_F(Cli, SimulateWritesDataAndTruth) {
  const gpm::RawTable t = gpm::read_raw_table(at("d.csv"));
  EXPECT_EQ(t.size(), 60u);
  EXPECT_EQ(t.covariate_names.size(), 3u);
  EXPECT_TRUE(fs::exists(at("truth.csv")));
}

TEST_F(Cli, FitIsDeterministicForAFixedSeed) {
  ASSERT_EQ(run("fit --data " + at("d.csv") + kShortFit + " --seed 7 --out " + at("c1.jsonl")).exit_code, 0);
  ASSERT_EQ(run("fit --data " + at("d.csv") + kShortFit + " --seed 7 --out " + at("c2.jsonl")).exit_code, 0);
  ASSERT_EQ(run("fit --data " + at("d.csv") + kShortFit + " --seed 8 --out " + at("c3.jsonl")).exit_code, 0);
  EXPECT_EQ(gpm::read_file(at("c1.jsonl")), gpm::read_file(at("c2.jsonl")));
  EXPECT_NE(gpm::read_file(at("c1.jsonl")), gpm::read_file(at("c3.jsonl")));
  const gpm::ChainFile c = gpm::read_chain_file(at("c1.jsonl"));
  EXPECT_EQ(c.records.size(), 80u);
  EXPECT_EQ(c.header.seed, 7u);
}

TEST_F(Cli, PredictChecksDigestAndWritesCurves) {
  ASSERT_EQ(run("fit --data " + at("d.csv") + kShortFit + " --seed 1 --out " + at("p.jsonl")).exit_code, 0);
  const Outcome ok = run("predict --chain " + at("p.jsonl") + " --data " + at("d.csv") +
                     " --patients 0,5 --grid-points 10 --out " + at("pred.csv"));
  ASSERT_EQ(ok.exit_code, 0) << ok.err;
  const std::string csv = gpm::read_file(at("pred.csv"));
  EXPECT_EQ(csv.rfind("row,t_days,survival,density,hazard,p_infinity\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
  EXPECT_TRUE(fs::exists(at("pred_survival.svg")));

  ASSERT_EQ(run("simulate --scenario null --n 30 --seed 4 --out " + at("other.csv")).exit_code, 0);
  const Outcome bad = run("predict --chain " + at("p.jsonl") + " --data " + at("other.csv") + " --out " + at("x.csv"));
  EXPECT_EQ(bad.exit_code, 3);
  EXPECT_NE(bad.err.find("error code=DIGEST_MISMATCH"), std::string::npos) << bad.err;
}

TEST_F(Cli, ErrorCodesAndExitStatus) {
  const Outcome missing = run("fit --data " + at("nope.csv") + " --out " + at("x.jsonl"));
  EXPECT_EQ(missing.exit_code, 3);
  EXPECT_NE(missing.err.find("error code=FILE_NOT_FOUND"), std::string::npos);

  const Outcome usage = run("fit --out " + at("x.jsonl"));
  EXPECT_EQ(usage.exit_code, 2);
  EXPECT_NE(usage.err.find("error code=USAGE"), std::string::npos);

  const Outcome sched = run("fit --data " + at("d.csv") + " --n-total 10 --n-discard 20 --out " + at("x.jsonl"));
  EXPECT_EQ(sched.exit_code, 2);
  EXPECT_NE(sched.err.find("error code=BAD_SCHEDULE"), std::string::npos) << sched.err;

  const Outcome column = run("fit --data " + at("d.csv") + " --covariates x9 --out " + at("x.jsonl"));
  EXPECT_EQ(column.exit_code, 3);
  EXPECT_NE(column.err.find("error code=MISSING_COLUMN"), std::string::npos);

  EXPECT_EQ(run("no-such-command").exit_code, 2);
}

TEST_F(Cli, AsiAndCompare) {
  const Outcome asi = run("asi --data " + at("d.csv") + kShortFit + " --seed 2 --draws 200 --out " + at("r.json"));
  ASSERT_EQ(asi.exit_code, 0) << asi.err;
  const gpm::AsiReport r = gpm::read_report_file(at("r.json"));
  EXPECT_EQ(r.samples.size(), 60u);
  EXPECT_EQ(r.mean_samples.size(), 200u);
  EXPECT_TRUE(fs::exists(at("r_samples.csv")));
  EXPECT_TRUE(fs::exists(at("r_asi_hist.svg")));

  const Outcome self = run("compare --a " + at("r.json") + " --b " + at("r.json"));
  ASSERT_EQ(self.exit_code, 0) << self.err;
  const auto j = nlohmann::json::parse(self.out);
  EXPECT_DOUBLE_EQ(j.at("p_all_pairs").get<double>(), 0.5);

  const Outcome pub = run("compare --a " + at("r.json") + " --published -5,-6,-4");
  ASSERT_EQ(pub.exit_code, 0) << pub.err;
  EXPECT_GT(nlohmann::json::parse(pub.out).at("p_gaussian").get<double>(), 0.99);
}

TEST_F(Cli, PriorVizWritesNineFigures) {
  const Outcome r = run("prior-viz --out-dir " + at("pv") + " --samples 2000 --curves 40 --seed 1");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  int svgs = 0;
  for (const auto& e : fs::directory_iterator(at("pv"))) svgs += e.path().extension() == ".svg" ? 1 : 0;
  EXPECT_EQ(svgs, 9);
  const std::string j = gpm::read_file(at("pv/prior_J.csv"));
  const auto line = j.substr(j.find("\n1,") + 3, j.find('\n', j.find("\n1,") + 1) - j.find("\n1,") - 3);
  EXPECT_NEAR(std::stod(line), 0.2, 1e-12);
}
