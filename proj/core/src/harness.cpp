#include "hoope/harness.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include "csv_util.hpp"
#include "hoope/rng.hpp"

namespace hoope {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return kNan;
  return cov / (std::sqrt(va) * std::sqrt(vb));
}

[[noreturn]] void stage_fail(const std::string& stage, const std::exception& e) {
  throw std::runtime_error("offline stage '" + stage + "' failed: " + e.what());
}

void ensure_output_dir(const ExperimentConfig& cfg) {
  if (!cfg.output_dir.empty() && cfg.output_dir != ".")
    std::filesystem::create_directories(cfg.output_dir);
}

}  // namespace

ClimatologyPrior run_offline(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_output_dir(cfg);

  // Observed climatological index and its bootstrap variance.
  std::vector<ObservationBatch> obs;
  try {
    if (!cfg.observation_file.empty()) {
      obs = read_observations_csv(cfg.observation_file);
    } else {
      const NatureRun nature =
          cfg.nature_file.empty()
              ? generate_nature_run(cfg.model, cfg.run_length_mtu,
                                    cfg.nature_spinup_mtu, cfg.seed_nature)
              : read_nature_csv(cfg.nature_file);
      obs = generate_observations(nature, cfg.observed_grids,
                                  cfg.obs_noise_std, cfg.seed_obs);
    }
  } catch (const std::exception& e) {
    stage_fail("observations", e);
  }

  ClimIndex gamma_obs;
  Vector r_o;
  try {
    const auto series = observation_series_per_grid(obs, cfg.observed_grids);
    const double full_window =
        static_cast<double>(series.front().size()) * kObsIntervalMtu;
    gamma_obs = climatological_index(series, cfg.index_lags, full_window);
    r_o = estimate_observation_index_variance(
        series, cfg.index_lags, cfg.n_bootstrap, cfg.bootstrap_subset_mtu,
        mix_seed(cfg.seed_obs, 0xB007));
  } catch (const std::exception& e) {
    stage_fail("observed index", e);
  }

  // Evenly spaced parameter ensemble, one long single-scale run each.
  const std::vector<double> grid =
      linear_grid(cfg.param_min, cfg.param_max, cfg.param_grid_count);
  Vector inputs(cfg.param_grid_count);
  Matrix targets(cfg.param_grid_count,
                 static_cast<int>(cfg.index_lags.size()));
  try {
    const int n_intervals = static_cast<int>(
        std::lround(cfg.offline_run_mtu / kObsIntervalMtu));
    const int steps = cfg.model.steps_per_interval();
    for (int j = 0; j < cfg.param_grid_count; ++j) {
      RngStream rng(mix_seed(cfg.seed_init, 7000 + j));
      SingleScaleState state;
      state.x.resize(cfg.model.n_x);
      for (int k = 0; k < cfg.model.n_x; ++k) state.x[k] = rng.normal();
      ParameterField field;
      field.f = Vector::Constant(cfg.model.n_x, grid[j]);

      std::vector<std::vector<double>> series(cfg.observed_grids.size());
      for (auto& s : series) s.reserve(n_intervals);
      for (int i = 0; i < n_intervals; ++i) {
        advance_single_scale(state, field, cfg.model, steps);
        if (!state.x.allFinite())
          throw std::runtime_error("offline run diverged at parameter " +
                                   std::to_string(grid[j]));
        for (std::size_t gi = 0; gi < cfg.observed_grids.size(); ++gi)
          series[gi].push_back(state.x[cfg.observed_grids[gi]]);
      }

      inputs[j] = grid[j];
      try {
        const ClimIndex idx =
            climatological_index(series, cfg.index_lags, cfg.index_window_mtu);
        targets.row(j) = idx.values.transpose();
      } catch (const std::domain_error&) {
        // Steady-state regime: the trailing window is numerically constant.
        // Near a fixed point the lagged series is an affine function of the
        // unlagged one, so the correlation limit is 1 at every lag.
        targets.row(j).setOnes();
      }
    }
  } catch (const std::exception& e) {
    stage_fail("parameter ensemble", e);
  }

  GPModel gp;
  try {
    gp = GPModel::fit(inputs, targets, SurrogateMode::IndexVector);
  } catch (const std::exception& e) {
    stage_fail("surrogate fit", e);
  }

  McmcChain chain;
  ClimatologyPrior prior;
  try {
    const auto phi = [&](double theta) {
      return log_misfit_phi(gp, theta, gamma_obs, r_o);
    };
    const ParameterPrior bounds{cfg.param_min, cfg.param_max};
    chain = mh_sample(phi, bounds, cfg.mcmc_proposal_std, cfg.mcmc_total,
                      cfg.mcmc_burnin, cfg.seed_mcmc);
    prior = fit_gaussian(chain, cfg.model.n_x);
  } catch (const std::exception& e) {
    stage_fail("mcmc", e);
  }

  try {
    const std::string prior_out = cfg.prior_path.empty()
                                      ? cfg.output_dir + "/prior.txt"
                                      : cfg.prior_path;
    prior.save(prior_out);
    if (cfg.write_artifacts) {
      write_chain_csv(cfg.output_dir + "/chain.csv", chain);
      gp.save(cfg.output_dir + "/gp_model.txt");
    }
  } catch (const std::exception& e) {
    stage_fail("artifacts", e);
  }
  return prior;
}

namespace detail {

TwinInputs load_twin_inputs(const ExperimentConfig& cfg) {
  cfg.validate();
  TwinInputs inputs;
  inputs.nature =
      cfg.nature_file.empty()
          ? generate_nature_run(cfg.model, cfg.run_length_mtu,
                                cfg.nature_spinup_mtu, cfg.seed_nature)
          : read_nature_csv(cfg.nature_file);
  inputs.observations =
      cfg.observation_file.empty()
          ? generate_observations(inputs.nature, cfg.observed_grids,
                                  cfg.obs_noise_std, cfg.seed_obs)
          : read_observations_csv(cfg.observation_file);
  if (inputs.observations.size() != inputs.nature.size())
    throw std::runtime_error("observation/nature cycle count mismatch");

  if (!cfg.prior_path.empty())
    inputs.prior = ClimatologyPrior::load(cfg.prior_path);
  else if (cfg.variant != Variant::Nohoope)
    throw ConfigError("variant " + to_string(cfg.variant) +
                      " needs prior_path");
  return inputs;
}

MetricsReport run_assimilation_on(const ExperimentConfig& cfg,
                                  const TwinInputs& inputs) {
  const int n_x = cfg.model.n_x;
  const int k = cfg.ensemble_size;
  const NatureRun& nature = inputs.nature;

  // Initial ensemble: climatologically plausible states (random nature
  // snapshots) and parameters from the offline prior when available.
  RngStream rng(cfg.seed_init);
  AugmentedEnsemble ens;
  ens.n_x = n_x;
  ens.members.resize(2 * n_x, k);
  for (int i = 0; i < k; ++i) {
    const std::size_t idx = rng.uniform_index(nature.size());
    ens.members.col(i).head(n_x) = nature.x_true[idx];
  }
  for (int i = 0; i < k; ++i) {
    for (int g = 0; g < n_x; ++g) {
      if (inputs.prior)
        ens.members(n_x + g, i) = rng.normal(
            inputs.prior->theta_c[g], std::sqrt(inputs.prior->c_diag[g]));
      else
        ens.members(n_x + g, i) = rng.uniform(cfg.param_min, cfg.param_max);
    }
  }

  InflationConfig inf = cfg.inflation;
  inf.adaptive.reset(2 * n_x);
  if (cfg.variant == Variant::Rtc) inf.inflate_parameter_block = false;

  const int steps = cfg.model.steps_per_interval();
  const std::size_t n_cycles = nature.size();

  std::vector<double> times;
  std::vector<Vector> mean_x, mean_f, std_f;
  times.reserve(n_cycles);
  mean_x.reserve(n_cycles);
  mean_f.reserve(n_cycles);
  std_f.reserve(n_cycles);

  bool diverged = false;
  SingleScaleState member_state;
  ParameterField member_field;
  for (std::size_t cycle = 0; cycle < n_cycles && !diverged; ++cycle) {
    // Forecast: parameters persist within each member.
    for (int i = 0; i < k && !diverged; ++i) {
      member_state.x = ens.members.col(i).head(n_x);
      member_field.f = ens.members.col(i).tail(n_x);
      advance_single_scale(member_state, member_field, cfg.model, steps);
      if (!member_state.x.allFinite() ||
          member_state.x.cwiseAbs().maxCoeff() > kDivergenceLimit) {
        diverged = true;
        break;
      }
      ens.members.col(i).head(n_x) = member_state.x;
    }
    if (diverged) break;

    ObservationBatch batch = inputs.observations[cycle];
    if (cfg.variant == Variant::Pso) {
      batch = pso_augment(batch, *inputs.prior);
    } else if (cfg.variant == Variant::Rtc) {
      const Vector rho_vec =
          inf.mode == InflationMode::Adaptive
              ? inf.adaptive.rho.tail(n_x).eval()
              : Vector::Constant(n_x, inf.rho_theta).eval();
      rtc_apply(ens, *inputs.prior, rho_vec);
    }

    AnalysisResult result = analyze(ens, batch.entries, cfg.localization, inf);
    if (result.diverged) {
      diverged = true;
      break;
    }
    ens = std::move(result.ensemble);

    times.push_back(nature.times[cycle]);
    mean_x.push_back(ens.state_block().rowwise().mean());
    mean_f.push_back(ens.param_block().rowwise().mean());
    Vector sd(n_x);
    for (int g = 0; g < n_x; ++g) {
      const double m = ens.members.row(n_x + g).mean();
      sd[g] = std::sqrt((ens.members.row(n_x + g).array() - m).square().sum() /
                        (k - 1));
    }
    std_f.push_back(std::move(sd));
  }

  MetricsReport report;
  report.cycles_run = static_cast<long>(times.size());
  report.diverged = diverged;
  if (diverged) {
    report.rmse_state = report.rmse_param = kNan;
    report.r_state = report.r_param = kNan;
  } else {
    report = compute_metrics(times, mean_x, mean_f, nature, cfg.spinup_mtu);
    report.cycles_run = static_cast<long>(times.size());
  }

  if (cfg.write_artifacts) {
    ensure_output_dir(cfg);
    const std::string dir = cfg.output_dir;
    {
      auto f = csv::open_out(dir + "/param_timeseries.csv");
      f << "time_mtu,grid,truth,mean,std\n";
      for (std::size_t i = 0; i < times.size(); ++i)
        for (int g = 0; g < n_x; ++g)
          f << csv::fmt(times[i]) << "," << (g + 1) << ","
            << csv::fmt(nature.f_true[i][g]) << "," << csv::fmt(mean_f[i][g])
            << "," << csv::fmt(std_f[i][g]) << "\n";
    }
    {
      auto f = csv::open_out(dir + "/param_hovmoller.csv");
      f << "time_mtu,grid,variant,value\n";
      for (std::size_t i = 0; i < times.size(); ++i)
        for (int g = 0; g < n_x; ++g)
          f << csv::fmt(times[i]) << "," << (g + 1) << ","
            << to_string(cfg.variant) << "," << csv::fmt(mean_f[i][g]) << "\n";
    }
    {
      SweepRow row;
      row.rho_x = inf.mode == InflationMode::Fixed ? cfg.inflation.rho_x : 0.0;
      row.rho_theta =
          inf.mode == InflationMode::Fixed ? cfg.inflation.rho_theta : 0.0;
      row.metrics = report;
      write_metrics_csv(dir + "/metrics.csv", {row});
    }
  }
  return report;
}

}  // namespace detail

MetricsReport run_assimilation(const ExperimentConfig& cfg) {
  const detail::TwinInputs inputs = detail::load_twin_inputs(cfg);
  return detail::run_assimilation_on(cfg, inputs);
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg,
                            const std::vector<double>& rho_x_grid,
                            const std::vector<double>& rho_theta_grid) {
  if (rho_x_grid.empty() || rho_theta_grid.empty())
    throw std::invalid_argument("sweep grids must be nonempty");
  const detail::TwinInputs inputs = detail::load_twin_inputs(cfg);

  std::vector<SweepRow> rows;
  rows.reserve(rho_x_grid.size() * rho_theta_grid.size());
  for (double rx : rho_x_grid) {
    for (double rt : rho_theta_grid) {
      ExperimentConfig cell = cfg;
      cell.inflation.mode = InflationMode::Fixed;
      cell.inflation.rho_x = rx;
      cell.inflation.rho_theta = rt;
      cell.write_artifacts = false;
      SweepRow row;
      row.rho_x = rx;
      row.rho_theta = rt;
      row.metrics = detail::run_assimilation_on(cell, inputs);
      rows.push_back(row);
    }
  }
  if (cfg.write_artifacts) {
    ensure_output_dir(cfg);
    write_metrics_csv(cfg.output_dir + "/metrics.csv", rows);
  }
  return rows;
}

MetricsReport compute_metrics(const std::vector<double>& times,
                              const std::vector<Vector>& mean_x,
                              const std::vector<Vector>& mean_f,
                              const NatureRun& truth,
                              double window_start_mtu) {
  if (times.size() != mean_x.size() || times.size() != mean_f.size())
    throw std::invalid_argument("metrics series length mismatch");
  if (times.size() > truth.size())
    throw std::invalid_argument("estimate series longer than truth");

  std::vector<double> est_x, tru_x, est_f, tru_f;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - truth.times[i]) > 1e-9)
      throw std::invalid_argument("timestamps not aligned with truth");
    if (times[i] <= window_start_mtu) continue;
    for (int g = 0; g < mean_x[i].size(); ++g) {
      est_x.push_back(mean_x[i][g]);
      tru_x.push_back(truth.x_true[i][g]);
      est_f.push_back(mean_f[i][g]);
      tru_f.push_back(truth.f_true[i][g]);
    }
  }
  if (est_x.empty()) throw std::invalid_argument("empty metrics window");

  auto rmse = [](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / a.size());
  };

  MetricsReport report;
  report.rmse_state = rmse(est_x, tru_x);
  report.r_state = pearson(est_x, tru_x);
  report.rmse_param = rmse(est_f, tru_f);
  report.r_param = pearson(est_f, tru_f);
  report.cycles_run = static_cast<long>(times.size());
  return report;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<SweepRow>& rows) {
  auto f = csv::open_out(path);
  f << "rho_x,rho_theta,rmse_state,r_state,rmse_param,r_param,diverged\n";
  for (const auto& row : rows)
    f << csv::fmt(row.rho_x) << "," << csv::fmt(row.rho_theta) << ","
      << csv::fmt(row.metrics.rmse_state) << "," << csv::fmt(row.metrics.r_state)
      << "," << csv::fmt(row.metrics.rmse_param) << ","
      << csv::fmt(row.metrics.r_param) << "," << (row.metrics.diverged ? 1 : 0)
      << "\n";
}

std::vector<SweepRow> read_metrics_csv(const std::string& path) {
  auto f = csv::open_in(path);
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("empty metrics file: " + path);

  std::vector<SweepRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != 7)
      throw std::runtime_error("bad metrics row in " + path);
    SweepRow row;
    row.rho_x = csv::to_double(cells[0]);
    row.rho_theta = csv::to_double(cells[1]);
    row.metrics.rmse_state = csv::to_double(cells[2]);
    row.metrics.r_state = csv::to_double(cells[3]);
    row.metrics.rmse_param = csv::to_double(cells[4]);
    row.metrics.r_param = csv::to_double(cells[5]);
    row.metrics.diverged = csv::to_double(cells[6]) != 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hoope
