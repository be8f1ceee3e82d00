#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hoope/models.hpp"

namespace hoope {

/// Stored truth trajectory: slow state and the true parameter field
/// F[k] = S + U[k] sampled at every observation interval.
struct NatureRun {
  std::vector<double> times;   ///< MTU stamps, strictly increasing
  std::vector<Vector> x_true;  ///< X at each stamp
  std::vector<Vector> f_true;  ///< S + coupling tendency at each stamp

  std::size_t size() const { return times.size(); }
};

enum class ObsKind { State, PseudoParameter };

/// One scalar observation. `location` is the 0-based grid index of the
/// observed slow variable (State) or of the targeted parameter
/// (PseudoParameter). Noise is already folded into `value`.
struct ObsEntry {
  int location = 0;
  double value = 0.0;
  double error_variance = 1.0;
  ObsKind kind = ObsKind::State;
};

/// All observations valid at one analysis time.
struct ObservationBatch {
  double time = 0.0;
  std::vector<ObsEntry> entries;
};

/// Climatological index: autocorrelations of the observed slow variables at
/// a few fixed lags, the quantity the offline calibration matches.
struct ClimIndex {
  Vector values;    ///< autocorrelation per lag, each in [-1, 1]
  Vector lags_mtu;  ///< lag of each entry in MTU
};

/// Integrates the two-scale model from a seeded random initial state,
/// discards `spinup_mtu`, then stores X and F = S + U at every observation
/// interval (first stamp at one interval past spinup). Deterministic given
/// the seed. Throws std::runtime_error if the state diverges.
NatureRun generate_nature_run(const ModelConstants& c, double length_mtu,
                              double spinup_mtu, std::uint64_t seed);

/// One batch per stored time; per observed grid (0-based indices), value =
/// truth + N(0, noise_std^2), error_variance = noise_std^2.
std::vector<ObservationBatch> generate_observations(
    const NatureRun& run, const std::vector<int>& observed_grids,
    double noise_std, std::uint64_t seed);

/// Pearson correlation of series[0..n-lag) against series[lag..n).
/// Throws std::domain_error when either slice has zero variance.
double autocorrelation(const std::vector<double>& series, int lag);

/// Autocorrelations averaged over the per-grid series at the given lags
/// (in observation intervals), restricted to the trailing window. Series
/// are sampled every `interval_mtu`.
ClimIndex climatological_index(const std::vector<std::vector<double>>& series_per_grid,
                               const std::vector<int>& lags_intervals,
                               double window_mtu,
                               double interval_mtu = kObsIntervalMtu);

/// Bootstrap estimate of the per-index variance R_o of the observed
/// climatological index: n_bootstrap indices, each computed on a randomly
/// positioned contiguous subset of length subset_length_mtu.
Vector estimate_observation_index_variance(
    const std::vector<std::vector<double>>& series_per_grid,
    const std::vector<int>& lags_intervals, int n_bootstrap,
    double subset_length_mtu, std::uint64_t seed,
    double interval_mtu = kObsIntervalMtu);

/// Per-grid observed series extracted from batches, one series per entry
/// of observed_grids (order preserved). Requires a consistent network.
std::vector<std::vector<double>> observation_series_per_grid(
    const std::vector<ObservationBatch>& batches,
    const std::vector<int>& observed_grids);

// CSV round-trip. Nature: time_mtu, x_1..x_nx, f_1..f_nx.
// Observations: time_mtu, location, value, error_variance (1-based location).
void write_nature_csv(const std::string& path, const NatureRun& run);
NatureRun read_nature_csv(const std::string& path);
void write_observations_csv(const std::string& path,
                            const std::vector<ObservationBatch>& batches);
std::vector<ObservationBatch> read_observations_csv(const std::string& path);

}  // namespace hoope
