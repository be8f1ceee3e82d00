#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hoope/batchopt.hpp"
#include "hoope/enkf.hpp"
#include "hoope/hoope.hpp"
#include "hoope/synth.hpp"

namespace hoope {

enum class Variant { Nohoope, Pso, Rtc };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Full run specification. Defaults follow the desk preset: every long-run
/// length is one tenth of the full-scale `paper` preset, everything else is
/// identical. All seeds are explicit; nothing draws entropy at runtime.
struct ExperimentConfig {
  Variant variant = Variant::Nohoope;
  int ensemble_size = 20;

  // Twin-experiment horizon.
  double run_length_mtu = 720.0;
  double spinup_mtu = 250.0;         ///< assimilation spin-up excluded from metrics
  double nature_spinup_mtu = 50.0;   ///< attractor spin-up before storing truth

  // Offline calibration.
  double offline_run_mtu = 2880.0;
  double index_window_mtu = 200.0;
  double bootstrap_subset_mtu = 50.0;
  int n_bootstrap = 1000;
  int param_grid_count = 100;
  double param_min = 0.0;
  double param_max = 30.0;
  long mcmc_total = 500000;
  long mcmc_burnin = 100000;
  double mcmc_proposal_std = 1.5;  ///< 5% of the prior range

  // Observing network.
  std::vector<int> observed_grids = {0, 1, 4, 5};  ///< 0-based
  double obs_noise_std = 0.1;
  std::vector<int> index_lags = {2, 3, 4};  ///< in observation intervals

  InflationConfig inflation;
  LocalizationConfig localization;
  ModelConstants model;

  std::uint64_t seed_nature = 1001;
  std::uint64_t seed_obs = 1002;
  std::uint64_t seed_init = 1003;
  std::uint64_t seed_mcmc = 1004;

  // I/O. Empty nature/observation paths mean "generate in memory".
  std::string prior_path;
  std::string nature_file;
  std::string observation_file;
  std::string output_dir = ".";
  bool write_artifacts = true;

  static ExperimentConfig desk();
  static ExperimentConfig paper();

  /// Flat `key = value` text; '#' starts a comment. Unknown keys are a
  /// config error. An optional leading `preset = desk|paper` key selects
  /// the base the remaining keys overlay.
  static ExperimentConfig from_file(const std::string& path);
  void apply_key(const std::string& key, const std::string& value);

  void validate() const;  ///< throws ConfigError
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricsReport {
  double rmse_state = 0.0;
  double r_state = 0.0;
  double rmse_param = 0.0;
  double r_param = 0.0;
  bool diverged = false;
  long cycles_run = 0;
};

/// One sweep cell (also the metrics.csv row schema).
struct SweepRow {
  double rho_x = 0.0;
  double rho_theta = 0.0;
  MetricsReport metrics;
};

/// Offline batch optimization end to end: evenly spaced parameter ensemble,
/// long single-scale runs with spatially uniform F, climatological index per
/// run, surrogate fit, Metropolis-Hastings through the surrogate, Gaussian
/// fit. Writes prior.txt, chain.csv and gp_model.txt into output_dir (and to
/// prior_path when set).
ClimatologyPrior run_offline(const ExperimentConfig& cfg);

/// Assimilation twin experiment for one variant. Writes metrics.csv,
/// param_timeseries.csv and param_hovmoller.csv into output_dir when
/// write_artifacts is set.
MetricsReport run_assimilation(const ExperimentConfig& cfg);

/// Inflation-grid sweep: one fixed-inflation run per (rho_x, rho_theta)
/// pair, cells evaluated in row-major grid order. Individual divergences
/// are recorded and the sweep continues. Writes metrics.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg,
                            const std::vector<double>& rho_x_grid,
                            const std::vector<double>& rho_theta_grid);

/// RMSE and Pearson R over all (time, grid) pairs with time > window_start,
/// computed separately for the state and parameter series.
MetricsReport compute_metrics(const std::vector<double>& times,
                              const std::vector<Vector>& mean_x,
                              const std::vector<Vector>& mean_f,
                              const NatureRun& truth, double window_start_mtu);

void write_metrics_csv(const std::string& path,
                       const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_metrics_csv(const std::string& path);

/// Evenly spaced grid including both endpoints.
std::vector<double> linear_grid(double lo, double hi, int count);

namespace detail {

/// Shared by run_assimilation and sweep so a sweep generates the truth and
/// observations once.
struct TwinInputs {
  NatureRun nature;
  std::vector<ObservationBatch> observations;
  std::optional<ClimatologyPrior> prior;
};

TwinInputs load_twin_inputs(const ExperimentConfig& cfg);
MetricsReport run_assimilation_on(const ExperimentConfig& cfg,
                                  const TwinInputs& inputs);

}  // namespace detail

}  // namespace hoope
