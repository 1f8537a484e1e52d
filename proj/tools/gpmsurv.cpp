#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "gpm/engine.hpp"
#include "gpm/error.hpp"
#include "gpm/io.hpp"
#include "gpm/prediction.hpp"
#include "gpm/prior.hpp"
#include "gpm/simd/kernels.hpp"
#include "gpm/stats.hpp"
#include "gpm/synthetic.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace gpm;

namespace {

struct ScheduleFlags {
  std::string preset = "default";
  int n_anneal = -1, n_total = -1, n_discard = -1;

  void add(CLI::App* cmd, const std::string& default_preset) {
    preset = default_preset;
    cmd->add_option("--schedule", preset, "Schedule preset: default (1000/8000/2050) or desk (200/1600/200)")
        ->check(CLI::IsMember({"default", "desk"}))
        ->capture_default_str();
    cmd->add_option("--n-anneal", n_anneal, "Override the number of annealing samples");
    cmd->add_option("--n-total", n_total, "Override the total number of samples");
    cmd->add_option("--n-discard", n_discard, "Override the number of discarded samples");
  }

  AnnealSchedule build() const {
    AnnealSchedule s = preset == "desk" ? AnnealSchedule::desk() : AnnealSchedule{};
    if (n_anneal >= 0) s.n_anneal = n_anneal;
    if (n_total >= 0) s.n_total = n_total;
    if (n_discard >= 0) s.n_discard = n_discard;
    s.validate();
    return s;
  }
};

struct HyperFlags {
  std::string path;
  int max_modes = -1;

  void add(CLI::App* cmd) {
    cmd->add_option("--hyper", path, "JSON file overriding prior hyperparameters");
    cmd->add_option("--max-modes", max_modes, "Cap on the number of modes (0 = unbounded)");
  }

  Hyperparams build() const {
    Hyperparams h;
    if (!path.empty()) {
      try {
        const nlohmann::json j = nlohmann::json::parse(read_file(path));
        h.alpha_J = j.value("alpha_J", h.alpha_J);
        h.gamma = j.value("gamma", h.gamma);
        h.a_m = j.value("a_m", h.a_m);
        h.b_m = j.value("b_m", h.b_m);
        h.m_r = j.value("m_r", h.m_r);
        h.r_r = j.value("r_r", h.r_r);
        h.a_k = j.value("a_k", h.a_k);
        h.b_k = j.value("b_k", h.b_k);
        h.c_k = j.value("c_k", h.c_k);
        h.max_modes = j.value("max_modes", h.max_modes);
      } catch (const nlohmann::json::exception& e) {
        throw DataError("BAD_HYPER_FILE", e.what());
      }
    }
    if (max_modes >= 0) h.max_modes = max_modes;
    h.validate();
    return h;
  }
};

std::string stem_path(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  const fs::path stem = p.parent_path() / p.stem();
  return stem.string() + suffix;
}

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

std::vector<std::string> names_of(const RawTable& table, std::span<const std::size_t> subset) {
  std::vector<std::string> out;
  for (std::size_t c : subset) out.push_back(table.covariate_names[c]);
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  }
  return g;
}

void print_stats(const ChainStats& s) {
  std::fprintf(stderr,
               "acceptance: k_sign %.3f  r %.3f  latent_joint %.3f  latent_refresh %.3f  birth %.3f  death %.3f  "
               "beta %.3f\n",
               s.k_sign.rate(), s.r.rate(), s.latent_joint.rate(), s.latent_refresh.rate(), s.birth.rate(),
               s.death.rate(), s.beta.rate());
}

void write_report_views(const AsiReport& report, const std::string& out) {
  std::vector<std::vector<double>> rows;
  std::vector<double> values;
  for (const AsiSample& s : report.samples) {
    rows.push_back({static_cast<double>(s.patient), s.value, s.censored ? 1.0 : 0.0});
    values.push_back(s.value);
  }
  write_file_atomic(stem_path(out, "_samples.csv"), format_csv({"patient", "asi_nats", "censored"}, rows));
  std::vector<std::vector<double>> means;
  for (double m : report.mean_samples) means.push_back({m});
  write_file_atomic(stem_path(out, "_mean_samples.csv"), format_csv({"mean_asi_nats"}, means));

  const std::string label = report.subset.empty() ? "no covariates" : join(report.subset, ", ");
  write_file_atomic(stem_path(out, "_asi_hist.svg"),
                    svg_histogram({"Per-patient ASI (" + label + ")", "ASI (nats)", "density"}, values, 40));
  write_file_atomic(stem_path(out, "_mean_hist.svg"),
                    svg_histogram({"Mean ASI samples (" + label + ")", "mean ASI (nats)", "density"},
                                  report.mean_samples, 30));
}

AsiReport run_asi(const RawTable& table, std::span<const std::size_t> subset, const Prior& prior,
                  const ProtocolOptions& protocol, const MeanAsiOptions& mean_options, std::uint64_t seed) {
  const ProtocolResult result = split_half_protocol(table, subset, prior, protocol);
  Rng rng(derive_seed(seed, 0xA51));
  AsiReport report = estimate_mean_asi(result.samples, rng, mean_options);
  report.split_seed = result.split_seed;
  report.subset = names_of(table, subset);
  return report;
}

std::vector<double> analytic_density(const std::vector<double>& xs, const std::function<double(double)>& log_pdf) {
  std::vector<double> out;
  for (double x : xs) out.push_back(std::exp(log_pdf(x)));
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian survival regression with Gamma-power mixtures"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  int threads = 0;
  std::string backend = "auto";
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  app.add_option("--backend", backend, "Kernel backend: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  // fit
  CLI::App* fit = app.add_subcommand("fit", "Run one chain and write a chain file");
  std::string data_path, out_path, time_unit = "days";
  std::vector<std::string> covariates;
  bool keep_burn_in = false;
  ScheduleFlags fit_sched;
  HyperFlags fit_hyper;
  fit->add_option("--data", data_path, "Dataset CSV")->required();
  fit->add_option("--covariates", covariates, "Covariate columns to use (default: all)")->delimiter(',');
  fit->add_option("--time-unit", time_unit, "Unit of the time column")
      ->check(CLI::IsMember({"days", "months"}))
      ->capture_default_str();
  fit->add_option("--out", out_path, "Chain file to write")->required();
  fit->add_option("--seed", seed, "Random seed")->capture_default_str();
  fit->add_flag("--keep-burn-in", keep_burn_in, "Also record discarded samples");
  fit_sched.add(fit, "default");
  fit_hyper.add(fit);

  // predict
  CLI::App* predict = app.add_subcommand("predict", "Posterior-predictive curves for covariate rows");
  std::string chain_path, rows_path;
  std::vector<std::size_t> patients;
  double grid_max = 3650.0;
  int grid_points = 100;
  predict->add_option("--chain", chain_path, "Chain file from fit")->required();
  predict->add_option("--data", data_path, "Dataset the chain was fitted to")->required();
  predict->add_option("--rows-file", rows_path, "CSV of raw covariate rows to predict for");
  predict->add_option("--patients", patients, "Dataset row indices to predict for (default: 0)")->delimiter(',');
  predict->add_option("--grid-max", grid_max, "Last grid point in days")->capture_default_str();
  predict->add_option("--grid-points", grid_points, "Number of log-spaced grid points")->capture_default_str();
  predict->add_option("--out", out_path, "Output CSV; SVGs are written next to it")->required();

  // asi
  CLI::App* asi = app.add_subcommand("asi", "Split-half ASI and mean-ASI report");
  std::uint64_t split_seed = 2;
  std::string method = "bayesian-bootstrap";
  int n_draws = 850;
  bool standardize_on_full = false;
  ScheduleFlags asi_sched;
  HyperFlags asi_hyper;
  asi->add_option("--data", data_path, "Dataset CSV")->required();
  asi->add_option("--covariates", covariates, "Covariate columns to use (default: all)")->delimiter(',');
  asi->add_option("--time-unit", time_unit, "Unit of the time column")
      ->check(CLI::IsMember({"days", "months"}))
      ->capture_default_str();
  asi->add_option("--seed", seed, "Chain and bootstrap seed")->capture_default_str();
  asi->add_option("--split-seed", split_seed, "Seed of the random split")->capture_default_str();
  asi->add_option("--method", method, "bayesian-bootstrap or skew-student")->capture_default_str();
  asi->add_option("--draws", n_draws, "Posterior draws of the mean")->capture_default_str();
  asi->add_flag("--standardize-on-full", standardize_on_full, "Standardize with statistics of the whole file");
  asi->add_option("--out", out_path, "Report JSON; CSV and SVG views are written next to it")->required();
  asi_sched.add(asi, "default");
  asi_hyper.add(asi);

  // compare
  CLI::App* compare = app.add_subcommand("compare", "Probability that one subset's mean ASI exceeds another's");
  std::string report_a, report_b;
  std::vector<double> published;
  compare->add_option("--a", report_a, "Report JSON")->required();
  auto* opt_b = compare->add_option("--b", report_b, "Report JSON to compare against");
  auto* opt_pub = compare->add_option("--published", published, "Published mean,lo,hi in nats")
                      ->delimiter(',')
                      ->expected(3);
  opt_b->excludes(opt_pub);
  compare->require_option(2);

  // greedy
  CLI::App* greedy = app.add_subcommand("greedy", "Greedy incremental covariate selection");
  std::vector<std::string> base, candidates;
  int budget = 0;
  ScheduleFlags greedy_sched;
  HyperFlags greedy_hyper;
  greedy->add_option("--data", data_path, "Dataset CSV")->required();
  greedy->add_option("--base", base, "Covariates always included")->delimiter(',');
  greedy->add_option("--candidates", candidates, "Covariates to add one per round")->delimiter(',')->required();
  greedy->add_option("--budget", budget, "Rounds (default: all candidates)");
  greedy->add_option("--time-unit", time_unit, "Unit of the time column")
      ->check(CLI::IsMember({"days", "months"}))
      ->capture_default_str();
  greedy->add_option("--seed", seed, "Chain and bootstrap seed")->capture_default_str();
  greedy->add_option("--split-seed", split_seed, "Seed of the random split")->capture_default_str();
  greedy->add_option("--method", method, "bayesian-bootstrap or skew-student")->capture_default_str();
  greedy->add_option("--out", out_path, "Table CSV")->required();
  greedy_sched.add(greedy, "desk");
  greedy_hyper.add(greedy);

  // simulate
  CLI::App* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  std::string scenario = "prior", truth_path;
  std::size_t n_patients = 200, n_cov = 3;
  double horizon = 1000.0, censor_rate = 0.0;
  HyperFlags sim_hyper;
  simulate->add_option("--scenario", scenario, "prior, planted or null")
      ->check(CLI::IsMember({"prior", "planted", "null"}))
      ->capture_default_str();
  simulate->add_option("--n", n_patients, "Patients")->capture_default_str();
  simulate->add_option("--covariates", n_cov, "Covariates besides the constant (prior and null)")
      ->capture_default_str();
  simulate->add_option("--horizon", horizon, "Follow-up in days")->capture_default_str();
  simulate->add_option("--censor-rate", censor_rate, "Exponential censoring rate per day")->capture_default_str();
  simulate->add_option("--seed", seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", out_path, "Dataset CSV to write")->required();
  simulate->add_option("--truth", truth_path, "Also write the true parameters as JSON");
  sim_hyper.add(simulate);

  // calibrate
  CLI::App* calibrate = app.add_subcommand("calibrate", "Coverage of posterior bands on prior-drawn truths");
  int replications = 20;
  ScheduleFlags cal_sched;
  HyperFlags cal_hyper;
  calibrate->add_option("--replications", replications, "Synthetic datasets")->capture_default_str();
  calibrate->add_option("--n", n_patients, "Patients per dataset")->capture_default_str();
  calibrate->add_option("--covariates", n_cov, "Covariates besides the constant")->capture_default_str();
  calibrate->add_option("--horizon", horizon, "Follow-up in days")->capture_default_str();
  calibrate->add_option("--censor-rate", censor_rate, "Exponential censoring rate per day")->capture_default_str();
  calibrate->add_option("--seed", seed, "Random seed")->capture_default_str();
  calibrate->add_option("--out", out_path, "Per-replication CSV")->required();
  cal_sched.add(calibrate, "desk");
  cal_hyper.add(calibrate);

  // prior-viz
  CLI::App* prior_viz = app.add_subcommand("prior-viz", "Figures of the prior and its predictive curves");
  std::string out_dir;
  int n_samples = 20000, n_curves = 200;
  HyperFlags viz_hyper;
  prior_viz->add_option("--out-dir", out_dir, "Directory for SVG and CSV files")->required();
  prior_viz->add_option("--data", data_path, "Dataset whose standardized rows pair with prior draws");
  prior_viz->add_option("--covariates", n_cov, "Standard-normal covariates when no dataset is given")
      ->capture_default_str();
  prior_viz->add_option("--samples", n_samples, "Parameter draws per histogram")->capture_default_str();
  prior_viz->add_option("--curves", n_curves, "Survival and hazard curves")->capture_default_str();
  prior_viz->add_option("--seed", seed, "Random seed")->capture_default_str();
  viz_hyper.add(prior_viz);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error code=USAGE : " << e.what() << '\n';
    return 2;
  }

  try {
    if (backend == "scalar") simd::set_backend(simd::Backend::Scalar);
    if (backend == "avx2") {
      if (!simd::backend_available(simd::Backend::Avx2)) throw UsageError("BACKEND_UNAVAILABLE", "AVX2 kernels unavailable");
      simd::set_backend(simd::Backend::Avx2);
    }

    if (*fit) {
      const Hyperparams hyper = fit_hyper.build();
      const AnnealSchedule schedule = fit_sched.build();
      const TimeUnit unit = parse_time_unit(time_unit);
      const Ingested in = ingest(data_path, covariates, unit);
      const Prior prior(hyper);
      Retention retention;
      retention.keep_burn_in = keep_burn_in;
      ChainResult result = run_chain(in.dataset, prior, schedule, seed, retention);
      ChainFile chain;
      chain.header.hyper = hyper;
      chain.header.schedule = schedule;
      chain.header.seed = seed;
      chain.header.dataset_digest = digest_hex(in.digest);
      chain.header.time_unit = time_unit_name(unit);
      chain.header.standardization = in.record;
      chain.records = std::move(result.records);
      write_chain_file(out_path, chain);
      double mean_J = 0.0;
      int n = 0;
      for (const ChainRecord& r : chain.records) {
        if (r.burn_in) continue;
        mean_J += static_cast<double>(r.state.J());
        ++n;
      }
      print_stats(result.stats);
      std::fprintf(stderr, "retained %d samples, mean J %.3f\n", n, n ? mean_J / n : 0.0);
      return 0;
    }

    if (*predict) {
      const ChainFile chain = read_chain_file(chain_path);
      const std::string bytes = read_file(data_path);
      check_digest(chain, fnv1a64(bytes));
      const StandardizationRecord& record = chain.header.standardization;
      std::vector<std::vector<double>> raw_rows;
      if (!rows_path.empty()) {
        raw_rows = parse_covariate_rows(read_file(rows_path), record.names);
      } else {
        const RawTable table = parse_raw_table(bytes, parse_time_unit(chain.header.time_unit));
        std::vector<std::size_t> subset;
        for (const std::string& name : record.names) subset.push_back(table.column_index(name));
        if (patients.empty()) patients.push_back(0);
        for (std::size_t p : patients) {
          if (p >= table.size()) throw UsageError("BAD_PATIENT", "patient index " + std::to_string(p) + " out of range");
          raw_rows.push_back(select_columns(table.rows[p], subset));
        }
      }
      if (grid_points < 2 || !(grid_max > 1.0)) throw UsageError("BAD_GRID", "need grid-points >= 2 and grid-max > 1");
      const std::vector<double> grid = log_grid(1.0, grid_max, grid_points);
      const PosteriorPredictive predictive(chain.records);
      std::vector<std::vector<double>> rows;
      std::vector<SvgSeries> surv, haz;
      static const char* kColours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
      for (std::size_t i = 0; i < raw_rows.size(); ++i) {
        const std::vector<double> z = record.apply(raw_rows[i]);
        const PredictiveCurve c = predictive.curve(z, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) {
          rows.push_back({static_cast<double>(i), grid[g], c.survival[g], std::exp(c.log_density[g]), c.hazard[g],
                          c.p_infinity});
        }
        const std::string colour = kColours[i % 6];
        surv.push_back({"row " + std::to_string(i), grid, c.survival, colour});
        haz.push_back({"row " + std::to_string(i), grid, c.hazard, colour});
      }
      write_file_atomic(out_path,
                        format_csv({"row", "t_days", "survival", "density", "hazard", "p_infinity"}, rows));
      write_file_atomic(stem_path(out_path, "_survival.svg"),
                        svg_lines({"Predicted survival", "days", "survival", true, false}, surv));
      write_file_atomic(stem_path(out_path, "_hazard.svg"),
                        svg_lines({"Predicted hazard", "days", "hazard (1/day)", true, true}, haz));
      return 0;
    }

    if (*asi) {
      const Hyperparams hyper = asi_hyper.build();
      const TimeUnit unit = parse_time_unit(time_unit);
      const RawTable table = read_raw_table(data_path, unit);
      const std::vector<std::size_t> subset = resolve_subset(table, covariates);
      ProtocolOptions protocol;
      protocol.hyper = hyper;
      protocol.schedule = asi_sched.build();
      protocol.seed = seed;
      protocol.split_seed = split_seed;
      protocol.standardize_on_full = standardize_on_full;
      protocol.n_threads = threads;
      MeanAsiOptions mean_options{parse_method(method), n_draws};
      const Prior prior(hyper);
      const AsiReport report = run_asi(table, subset, prior, protocol, mean_options, seed);
      write_report_file(out_path, report);
      write_report_views(report, out_path);
      std::printf("mean_asi_nats=%.6f ci_lo=%.6f ci_hi=%.6f n=%zu method=%s\n", report.mean, report.ci_lo,
                  report.ci_hi, report.samples.size(), method_name(report.method).c_str());
      return 0;
    }

    if (*compare) {
      const AsiReport a = read_report_file(report_a);
      nlohmann::json out;
      if (!report_b.empty()) {
        const AsiReport b = read_report_file(report_b);
        const Comparison c = compare_subsets(a, b);
        out = {{"p_all_pairs", c.all_pairs}, {"p_gaussian", c.gaussian}};
      } else {
        if (published.size() != 3) throw UsageError("BAD_PUBLISHED", "--published needs mean,lo,hi");
        const PublishedComparison c = compare_to_published(a, published[0], published[1], published[2]);
        out = {{"p_gaussian", c.gaussian}, {"p_distribution_free", c.distribution_free}};
      }
      std::cout << out.dump() << '\n';
      return 0;
    }

    if (*greedy) {
      const Hyperparams hyper = greedy_hyper.build();
      const RawTable table = read_raw_table(data_path, parse_time_unit(time_unit));
      const std::vector<std::size_t> base_idx = base.empty() ? std::vector<std::size_t>{} : resolve_subset(table, base);
      const std::vector<std::size_t> cand_idx = resolve_subset(table, candidates);
      ProtocolOptions protocol;
      protocol.hyper = hyper;
      protocol.schedule = greedy_sched.build();
      protocol.seed = seed;
      protocol.split_seed = split_seed;
      protocol.n_threads = 1;
      const MeanAsiOptions mean_options{parse_method(method), 850};
      const Prior prior(hyper);
      const SubsetEvaluator evaluate = [&](std::span<const std::size_t> subset) {
        return run_asi(table, subset, prior, protocol, mean_options, seed);
      };
      const int rounds = budget > 0 ? budget : static_cast<int>(cand_idx.size());
      const std::vector<GreedyRow> table_rows = greedy_biomarker_selection(base_idx, cand_idx, rounds, evaluate, threads);
      std::string csv = "round,added,subset,mean_asi_nats,ci_lo,ci_hi\n";
      for (std::size_t r = 0; r < table_rows.size(); ++r) {
        const GreedyRow& row = table_rows[r];
        const std::string added = row.added < 0 ? "" : table.covariate_names[static_cast<std::size_t>(row.added)];
        csv += std::to_string(r) + ',' + added + ",\"" + join(names_of(table, row.subset), " ") + "\"," +
               format_double(row.report.mean) + ',' + format_double(row.report.ci_lo) + ',' +
               format_double(row.report.ci_hi) + '\n';
        std::printf("%-3zu %-16s mean %.4f  CI (%.4f, %.4f)\n", r, added.empty() ? "(base)" : ("+ " + added).c_str(),
                    row.report.mean, row.report.ci_lo, row.report.ci_hi);
      }
      write_file_atomic(out_path, csv);
      return 0;
    }

    if (*simulate) {
      Rng rng(seed);
      SyntheticSpec spec;
      if (scenario == "planted") {
        spec = planted_signal_spec(n_patients);
      } else if (scenario == "null") {
        spec = null_signal_spec(n_patients, n_cov);
      } else {
        const Prior prior(sim_hyper.build());
        spec.n_patients = n_patients;
        spec.modes = prior.sample_state(n_cov + 1, rng).modes;
      }
      spec.horizon = horizon;
      spec.censor_rate = censor_rate;
      const SyntheticData sim = generate(spec, {}, rng);
      write_file_atomic(out_path, format_raw_table(to_raw_table(sim.data)));
      if (!truth_path.empty()) {
        nlohmann::json modes = nlohmann::json::array();
        for (const ModeParams& m : spec.modes) modes.push_back({{"k", m.k}, {"m", m.m}, {"r", m.r}, {"beta", m.beta}});
        write_file_atomic(truth_path, nlohmann::json{{"scenario", scenario}, {"modes", modes}}.dump(1) + "\n");
      }
      return 0;
    }

    if (*calibrate) {
      CalibrationConfig config;
      config.n_patients = n_patients;
      config.n_covariates = n_cov + 1;
      config.n_replications = replications;
      config.horizon = horizon;
      config.censor_rate = censor_rate;
      config.schedule = cal_sched.build();
      config.n_threads = threads;
      const Prior prior(cal_hyper.build());
      const CalibrationReport report = calibration_run(config, prior, seed);
      std::string csv = "seed,J_true,mean_J_posterior,survival_inside,survival_cells,hazard_inside,hazard_cells\n";
      for (const ReplicationCoverage& r : report.replications) {
        csv += std::to_string(r.seed) + ',' + std::to_string(r.J_true) + ',' + format_double(r.mean_J_posterior) + ',' +
               std::to_string(r.survival_inside) + ',' + std::to_string(r.survival_cells) + ',' +
               std::to_string(r.hazard_inside) + ',' + std::to_string(r.hazard_cells) + '\n';
      }
      write_file_atomic(out_path, csv);
      std::printf("survival_coverage=%.4f (%d cells) hazard_coverage=%.4f (%d cells)\n", report.survival_coverage,
                  report.survival_cells, report.hazard_coverage, report.hazard_cells);
      return 0;
    }

    if (*prior_viz) {
      const Prior prior(viz_hyper.build());
      Rng rng(seed);
      fs::create_directories(out_dir);
      const auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

      // J law.
      std::vector<double> js, pj;
      std::vector<std::vector<double>> j_rows;
      for (int J = 1; J <= 10; ++J) {
        js.push_back(J);
        pj.push_back(std::exp(prior.log_prior_J(J)));
        j_rows.push_back({static_cast<double>(J), pj.back()});
      }
      write_file_atomic(path("prior_J.csv"), format_csv({"J", "probability"}, j_rows));
      write_file_atomic(path("prior_J.svg"), svg_bars({"Prior on the number of modes", "J", "probability"}, js, pj));

      // Parameter histograms with the analytic density overlaid.
      std::vector<double> ks, ms, rs, bs;
      for (int i = 0; i < n_samples; ++i) {
        ks.push_back(prior.sample_k(rng));
        ms.push_back(prior.sample_m(rng));
        rs.push_back(prior.sample_r(rng));
        bs.push_back(prior.sample_beta(rng));
      }
      std::vector<std::vector<double>> sample_rows;
      for (int i = 0; i < n_samples; ++i) {
        const auto u = static_cast<std::size_t>(i);
        sample_rows.push_back({ks[u], ms[u], rs[u], bs[u]});
      }
      write_file_atomic(path("prior_parameter_samples.csv"), format_csv({"k", "m", "r", "beta"}, sample_rows));

      struct Panel {
        std::string name, title, label;
        const std::vector<double>* draws;
        std::vector<double> x;
        std::function<double(double)> log_pdf;
      };
      const auto span_of = [](const std::vector<double>& v, double lo_q, double hi_q) {
        return std::pair{quantile(v, lo_q), quantile(v, hi_q)};
      };
      const auto [k_lo, k_hi] = span_of(ks, 0.005, 0.995);
      const auto [m_lo, m_hi] = span_of(ms, 0.0, 0.99);
      const auto [r_lo, r_hi] = span_of(rs, 0.0, 0.99);
      const auto [b_lo, b_hi] = span_of(bs, 0.005, 0.995);
      std::vector<Panel> panels{
          {"prior_beta", "Prior on each beta coefficient", "beta", &bs, linspace(b_lo, b_hi, 200),
           [&](double x) { return prior.log_prior_beta(x); }},
          {"prior_k", "Prior on k", "k", &ks, linspace(k_lo, k_hi, 400), [&](double x) { return prior.log_prior_k(x); }},
          {"prior_m", "Prior on m", "m", &ms, linspace(std::max(m_lo, 1e-3), m_hi, 200),
           [&](double x) { return prior.log_prior_m(x); }},
          {"prior_r", "Prior on r", "r (1/day)", &rs, linspace(std::max(r_lo, 1e-6), r_hi, 200),
           [&](double x) { return prior.log_prior_r(x); }},
      };
      std::vector<std::vector<double>> density_rows;
      for (Panel& p : panels) {
        std::vector<double> shown;
        for (double v : *p.draws) {
          if (v >= p.x.front() && v <= p.x.back()) shown.push_back(v);
        }
        std::vector<double> dens = analytic_density(p.x, p.log_pdf);
        // Histogram of the truncated draws is a density on the shown window.
        const double kept = static_cast<double>(shown.size()) / static_cast<double>(p.draws->size());
        for (double& d : dens) d /= kept;
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < p.x.size(); ++i) rows.push_back({p.x[i], dens[i]});
        write_file_atomic(path(p.name + "_density.csv"), format_csv({p.label, "density"}, rows));
        write_file_atomic(path(p.name + ".svg"),
                          svg_histogram({p.title, p.label, "density"}, shown, 60,
                                        {{"analytic", p.x, dens, "#d62728"}}));
      }

      // Predictive curves.
      std::vector<std::vector<double>> rows;
      if (!data_path.empty()) {
        const Ingested in = ingest(data_path, {});
        for (const PatientRecord& rec : in.dataset.records()) rows.push_back(rec.covariates);
      } else {
        for (int i = 0; i < 1000; ++i) rows.push_back(standard_normal_row(n_cov + 1, rng));
      }
      const std::vector<double> grid = log_grid(1.0, 3650.0, 120);
      const PriorPredictiveCurves curves = prior_predictive_curves(prior, rows, rng, n_curves, grid);
      std::vector<std::string> header{"t_days"};
      for (int c = 0; c < n_curves; ++c) header.push_back("curve" + std::to_string(c));
      const auto curve_table = [&](const std::vector<std::vector<double>>& cs) {
        std::vector<std::vector<double>> out;
        for (std::size_t g = 0; g < grid.size(); ++g) {
          std::vector<double> row{grid[g]};
          for (const auto& c : cs) row.push_back(c[g]);
          out.push_back(std::move(row));
        }
        return format_csv(header, out);
      };
      write_file_atomic(path("prior_survival_samples.csv"), curve_table(curves.survival));
      write_file_atomic(path("prior_hazard_samples.csv"), curve_table(curves.hazard));
      std::vector<SvgSeries> surv, haz;
      const int shown = std::min(n_curves, 40);
      for (int c = 0; c < shown; ++c) {
        const auto u = static_cast<std::size_t>(c);
        surv.push_back({"", grid, curves.survival[u], "#1f77b4", 0.5, 1.0});
        haz.push_back({"", grid, curves.hazard[u], "#1f77b4", 0.5, 1.0});
      }
      write_file_atomic(path("prior_survival_samples.svg"),
                        svg_lines({"Prior survival curves", "days", "survival", true, false}, surv));
      write_file_atomic(path("prior_hazard_samples.svg"),
                        svg_lines({"Prior hazard curves", "days", "hazard (1/day)", true, true}, haz));

      std::vector<std::vector<double>> summary;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        summary.push_back({grid[g], curves.survival_mean[g], curves.survival_lo[g], curves.survival_hi[g],
                           curves.hazard_mean[g], curves.hazard_lo[g], curves.hazard_hi[g]});
      }
      write_file_atomic(path("prior_curve_summary.csv"),
                        format_csv({"t_days", "survival_mean", "survival_2.5", "survival_97.5", "hazard_mean",
                                    "hazard_2.5", "hazard_97.5"},
                                   summary));
      write_file_atomic(
          path("prior_survival_summary.svg"),
          svg_lines({"Prior survival: mean and 95% band", "days", "survival", true, false},
                    {{"mean", grid, curves.survival_mean, "#1f77b4", 1.0, 2.0},
                     {"2.5%", grid, curves.survival_lo, "#7f7f7f", 1.0, 1.0, true},
                     {"97.5%", grid, curves.survival_hi, "#7f7f7f", 1.0, 1.0, true}}));
      write_file_atomic(path("prior_hazard_summary.svg"),
                        svg_lines({"Prior hazard: mean and 95% band", "days", "hazard (1/day)", true, true},
                                  {{"mean", grid, curves.hazard_mean, "#1f77b4", 1.0, 2.0},
                                   {"2.5%", grid, curves.hazard_lo, "#7f7f7f", 1.0, 1.0, true},
                                   {"97.5%", grid, curves.hazard_hi, "#7f7f7f", 1.0, 1.0, true}}));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error code=" << e.code() << " : " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error code=INTERNAL : " << e.what() << '\n';
    return 1;
  }
  return 0;
}
