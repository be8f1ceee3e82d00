// hoope — twin-experiment driver for joint state/parameter estimation with
// a climatology-constrained LETKF on the two-scale Lorenz96 testbed.
//
// Subcommands: nature, obsgen, offline, assimilate, sweep, report.
// Exit codes: 0 success, 2 configuration error, 3 filter divergence.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "hoope/harness.hpp"

using namespace hoope;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset = "desk";
};

ExperimentConfig build_config(const CommonOpts& opts,
                              const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = ExperimentConfig::from_file(opts.config_path);
  } else if (opts.preset == "desk") {
    cfg = ExperimentConfig::desk();
  } else if (opts.preset == "paper") {
    cfg = ExperimentConfig::paper();
  } else {
    throw ConfigError("unknown preset: " + opts.preset);
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value: " + kv);
    cfg.apply_key(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts,
                std::vector<std::string>& overrides) {
  cmd->add_option("--config", opts.config_path,
                  "key = value config file (see README for the schema)");
  cmd->add_option("--preset", opts.preset,
                  "desk (paper lengths / 10) or paper (full scale)")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--set", overrides,
                  "config override, key=value (repeatable)");
}

std::vector<double> parse_grid_spec(const std::string& spec) {
  // "lo:hi:count" or a single value.
  double lo = 0.0, hi = 0.0;
  int count = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) == 3)
    return linear_grid(lo, hi, count);
  try {
    return {std::stod(spec)};
  } catch (const std::exception&) {
    throw ConfigError("bad grid spec (want lo:hi:count or value): " + spec);
  }
}

void print_metrics(const std::string& label, const MetricsReport& m) {
  if (m.diverged) {
    std::printf("%s: DIVERGED after %ld cycles\n", label.c_str(), m.cycles_run);
    return;
  }
  std::printf(
      "%s: rmse_state=%.4f r_state=%.4f rmse_param=%.4f r_param=%.4f "
      "(%ld cycles)\n",
      label.c_str(), m.rmse_state, m.r_state, m.rmse_param, m.r_param,
      m.cycles_run);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Joint state/parameter estimation twin experiments: LETKF with an "
      "offline-calibrated parameter climatology (variants nohoope/pso/rtc)"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::vector<std::string> overrides;

  std::string out_path;
  std::string nature_path;
  std::string obs_path;
  std::string variant_flag;
  std::string rho_x_spec = "1.05:2.55:31";
  std::string rho_theta_spec = "1.05:7.05:31";
  std::string metrics_path;
  std::string echo_path;

  auto* nature_cmd =
      app.add_subcommand("nature", "Generate the two-scale truth run (CSV)");
  add_common(nature_cmd, opts, overrides);
  nature_cmd->add_option("--out", out_path, "output CSV (default nature.csv)");

  auto* obsgen_cmd = app.add_subcommand(
      "obsgen", "Generate noisy observations from the truth run (CSV)");
  add_common(obsgen_cmd, opts, overrides);
  obsgen_cmd->add_option("--nature", nature_path,
                         "truth CSV (default: regenerate from seeds)");
  obsgen_cmd->add_option("--out", out_path, "output CSV (default obs.csv)");

  auto* offline_cmd = app.add_subcommand(
      "offline",
      "Offline batch optimization: parameter ensemble, surrogate, MCMC, "
      "Gaussian prior");
  add_common(offline_cmd, opts, overrides);
  offline_cmd->add_option("--obs", obs_path,
                          "observation CSV (default: regenerate from seeds)");
  offline_cmd->add_option("--out", out_path,
                          "prior file (default <output_dir>/prior.txt)");

  std::string prior_path;
  auto* assim_cmd = app.add_subcommand(
      "assimilate", "Run one assimilation twin experiment and report metrics");
  add_common(assim_cmd, opts, overrides);
  assim_cmd->add_option("--variant", variant_flag, "nohoope | pso | rtc");
  assim_cmd->add_option("--prior", prior_path, "climatology prior file");

  std::string sweep_prior_path;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Inflation-grid sweep writing one metrics row per cell");
  add_common(sweep_cmd, opts, overrides);
  sweep_cmd->add_option("--variant", variant_flag, "nohoope | pso | rtc");
  sweep_cmd->add_option("--prior", sweep_prior_path, "climatology prior file");
  sweep_cmd->add_option("--rho-x", rho_x_spec, "grid lo:hi:count");
  sweep_cmd->add_option("--rho-theta", rho_theta_spec, "grid lo:hi:count");

  auto* report_cmd = app.add_subcommand(
      "report", "Summarize a metrics.csv (optionally re-emit it byte-exactly)");
  report_cmd->add_option("--metrics", metrics_path, "metrics CSV path")
      ->required();
  report_cmd->add_option("--echo", echo_path, "re-emit the table to this path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*nature_cmd) {
      const ExperimentConfig cfg = build_config(opts, overrides);
      const NatureRun run = generate_nature_run(
          cfg.model, cfg.run_length_mtu, cfg.nature_spinup_mtu, cfg.seed_nature);
      const std::string path = out_path.empty() ? "nature.csv" : out_path;
      write_nature_csv(path, run);
      std::printf("wrote %zu snapshots to %s\n", run.size(), path.c_str());
    } else if (*obsgen_cmd) {
      ExperimentConfig cfg = build_config(opts, overrides);
      if (!nature_path.empty()) cfg.nature_file = nature_path;
      const NatureRun run =
          cfg.nature_file.empty()
              ? generate_nature_run(cfg.model, cfg.run_length_mtu,
                                    cfg.nature_spinup_mtu, cfg.seed_nature)
              : read_nature_csv(cfg.nature_file);
      const auto batches = generate_observations(run, cfg.observed_grids,
                                                 cfg.obs_noise_std, cfg.seed_obs);
      const std::string path = out_path.empty() ? "obs.csv" : out_path;
      write_observations_csv(path, batches);
      std::printf("wrote %zu batches to %s\n", batches.size(), path.c_str());
    } else if (*offline_cmd) {
      ExperimentConfig cfg = build_config(opts, overrides);
      if (!obs_path.empty()) cfg.observation_file = obs_path;
      if (!out_path.empty()) cfg.prior_path = out_path;
      const ClimatologyPrior prior = run_offline(cfg);
      std::printf("prior: theta_c=%.6f c_diag=%.6f (%d parameters)\n",
                  prior.theta_c[0], prior.c_diag[0], prior.size());
    } else if (*assim_cmd) {
      ExperimentConfig cfg = build_config(opts, overrides);
      if (!variant_flag.empty()) cfg.variant = variant_from_string(variant_flag);
      if (!prior_path.empty()) cfg.prior_path = prior_path;
      const MetricsReport m = run_assimilation(cfg);
      print_metrics(to_string(cfg.variant), m);
      if (m.diverged) return 3;
    } else if (*sweep_cmd) {
      ExperimentConfig cfg = build_config(opts, overrides);
      if (!variant_flag.empty()) cfg.variant = variant_from_string(variant_flag);
      if (!sweep_prior_path.empty()) cfg.prior_path = sweep_prior_path;
      const auto rows = sweep(cfg, parse_grid_spec(rho_x_spec),
                              parse_grid_spec(rho_theta_spec));
      long diverged = 0;
      for (const auto& row : rows) diverged += row.metrics.diverged ? 1 : 0;
      std::printf("sweep: %zu cells, %ld diverged, table in %s/metrics.csv\n",
                  rows.size(), diverged, cfg.output_dir.c_str());
    } else if (*report_cmd) {
      const auto rows = read_metrics_csv(metrics_path);
      std::printf("%8s %9s %10s %8s %10s %8s %9s\n", "rho_x", "rho_theta",
                  "rmse_state", "r_state", "rmse_param", "r_param", "diverged");
      for (const auto& row : rows)
        std::printf("%8.3f %9.3f %10.4f %8.4f %10.4f %8.4f %9s\n", row.rho_x,
                    row.rho_theta, row.metrics.rmse_state, row.metrics.r_state,
                    row.metrics.rmse_param, row.metrics.r_param,
                    row.metrics.diverged ? "yes" : "no");
      if (!echo_path.empty()) write_metrics_csv(echo_path, rows);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
