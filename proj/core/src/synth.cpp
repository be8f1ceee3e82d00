#include "hoope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "csv_util.hpp"
#include "hoope/rng.hpp"

namespace hoope {

NatureRun generate_nature_run(const ModelConstants& c, double length_mtu,
                              double spinup_mtu, std::uint64_t seed) {
  c.validate();
  if (!(length_mtu > 0.0))
    throw std::invalid_argument("nature run length must be positive");

  RngStream rng(seed);
  TwoScaleState state;
  state.x.resize(c.n_x);
  state.v.resize(c.n_x * c.n_z);
  for (int k = 0; k < c.n_x; ++k) state.x[k] = rng.normal();
  for (int j = 0; j < c.n_x * c.n_z; ++j) state.v[j] = 0.1 * rng.normal();

  const int spinup_steps =
      static_cast<int>(std::lround(spinup_mtu * c.steps_per_mtu()));
  advance_two_scale(state, c, spinup_steps);
  if (!is_finite(state))
    throw std::runtime_error("nature run diverged during spinup");

  const int n_snapshots =
      static_cast<int>(std::lround(length_mtu / kObsIntervalMtu));
  const int interval_steps = c.steps_per_interval();

  NatureRun run;
  run.times.reserve(n_snapshots);
  run.x_true.reserve(n_snapshots);
  run.f_true.reserve(n_snapshots);
  for (int i = 0; i < n_snapshots; ++i) {
    advance_two_scale(state, c, interval_steps);
    if (!is_finite(state))
      throw std::runtime_error("nature run diverged at snapshot " +
                               std::to_string(i + 1));
    run.times.push_back((i + 1) * kObsIntervalMtu);
    run.x_true.push_back(state.x);
    Vector f = coupling_tendency(state, c);
    f.array() += c.forcing;
    run.f_true.push_back(std::move(f));
  }
  return run;
}

std::vector<ObservationBatch> generate_observations(
    const NatureRun& run, const std::vector<int>& observed_grids,
    double noise_std, std::uint64_t seed) {
  if (!(noise_std > 0.0))
    throw std::invalid_argument("observation noise std must be positive");
  if (run.size() == 0) throw std::invalid_argument("empty nature run");
  const int n_x = static_cast<int>(run.x_true[0].size());
  for (int g : observed_grids)
    if (g < 0 || g >= n_x)
      throw std::invalid_argument("observed grid index out of range");

  RngStream rng(seed);
  const double var = noise_std * noise_std;
  std::vector<ObservationBatch> batches;
  batches.reserve(run.size());
  for (std::size_t i = 0; i < run.size(); ++i) {
    ObservationBatch batch;
    batch.time = run.times[i];
    batch.entries.reserve(observed_grids.size());
    for (int g : observed_grids) {
      ObsEntry e;
      e.location = g;
      e.value = run.x_true[i][g] + noise_std * rng.normal();
      e.error_variance = var;
      e.kind = ObsKind::State;
      batch.entries.push_back(e);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

double autocorrelation(const std::vector<double>& series, int lag) {
  const int n = static_cast<int>(series.size());
  if (lag < 0) throw std::invalid_argument("lag must be nonnegative");
  if (n <= lag + 1)
    throw std::invalid_argument("series too short for requested lag");

  const int m = n - lag;
  double mean_a = 0.0, mean_b = 0.0;
  double lo = series[0], hi = series[0];
  for (int i = 0; i < n; ++i) {
    lo = std::min(lo, series[i]);
    hi = std::max(hi, series[i]);
  }
  if (lo == hi)
    throw std::domain_error("autocorrelation undefined for constant series");
  for (int i = 0; i < m; ++i) {
    mean_a += series[i];
    mean_b += series[i + lag];
  }
  mean_a /= m;
  mean_b /= m;

  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (int i = 0; i < m; ++i) {
    const double da = series[i] - mean_a;
    const double db = series[i + lag] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0)
    throw std::domain_error("autocorrelation undefined for constant series");
  return cov / (std::sqrt(var_a) * std::sqrt(var_b));
}

ClimIndex climatological_index(
    const std::vector<std::vector<double>>& series_per_grid,
    const std::vector<int>& lags_intervals, double window_mtu,
    double interval_mtu) {
  if (series_per_grid.empty())
    throw std::invalid_argument("need at least one series");
  const int n = static_cast<int>(series_per_grid.front().size());
  const int window = static_cast<int>(std::lround(window_mtu / interval_mtu));
  if (window > n)
    throw std::invalid_argument("index window longer than series");

  ClimIndex idx;
  idx.values.resize(static_cast<int>(lags_intervals.size()));
  idx.lags_mtu.resize(static_cast<int>(lags_intervals.size()));
  for (std::size_t li = 0; li < lags_intervals.size(); ++li) {
    double acc = 0.0;
    for (const auto& series : series_per_grid) {
      std::vector<double> tail(series.end() - window, series.end());
      acc += autocorrelation(tail, lags_intervals[li]);
    }
    idx.values[static_cast<int>(li)] =
        acc / static_cast<double>(series_per_grid.size());
    idx.lags_mtu[static_cast<int>(li)] = lags_intervals[li] * interval_mtu;
  }
  return idx;
}

Vector estimate_observation_index_variance(
    const std::vector<std::vector<double>>& series_per_grid,
    const std::vector<int>& lags_intervals, int n_bootstrap,
    double subset_length_mtu, std::uint64_t seed, double interval_mtu) {
  if (series_per_grid.empty())
    throw std::invalid_argument("need at least one series");
  const int n = static_cast<int>(series_per_grid.front().size());
  const int subset = static_cast<int>(std::lround(subset_length_mtu / interval_mtu));
  if (subset < 2) throw std::invalid_argument("bootstrap subset degenerate");
  if (subset > n)
    throw std::invalid_argument("bootstrap subset longer than series");

  const int n_starts = n - subset + 1;
  const int n_idx = static_cast<int>(lags_intervals.size());
  Matrix samples(n_bootstrap, n_idx);
  for (int r = 0; r < n_bootstrap; ++r) {
    RngStream rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    const int start = static_cast<int>(rng.uniform_index(n_starts));
    std::vector<std::vector<double>> windows;
    windows.reserve(series_per_grid.size());
    for (const auto& series : series_per_grid)
      windows.emplace_back(series.begin() + start,
                           series.begin() + start + subset);
    const ClimIndex idx = climatological_index(windows, lags_intervals,
                                               subset * interval_mtu,
                                               interval_mtu);
    samples.row(r) = idx.values.transpose();
  }

  Vector var(n_idx);
  for (int i = 0; i < n_idx; ++i) {
    const double mean = samples.col(i).mean();
    var[i] = (samples.col(i).array() - mean).square().sum() /
             std::max(1, n_bootstrap - 1);
  }
  return var;
}

std::vector<std::vector<double>> observation_series_per_grid(
    const std::vector<ObservationBatch>& batches,
    const std::vector<int>& observed_grids) {
  std::vector<std::vector<double>> series(observed_grids.size());
  for (auto& s : series) s.reserve(batches.size());
  for (const auto& batch : batches) {
    for (std::size_t gi = 0; gi < observed_grids.size(); ++gi) {
      const int g = observed_grids[gi];
      auto it = std::find_if(batch.entries.begin(), batch.entries.end(),
                             [g](const ObsEntry& e) {
                               return e.kind == ObsKind::State &&
                                      e.location == g;
                             });
      if (it == batch.entries.end())
        throw std::runtime_error("grid missing from observation batch");
      series[gi].push_back(it->value);
    }
  }
  return series;
}

void write_nature_csv(const std::string& path, const NatureRun& run) {
  auto f = csv::open_out(path);
  const int n_x = run.size() ? static_cast<int>(run.x_true[0].size()) : 0;
  f << "time_mtu";
  for (int k = 0; k < n_x; ++k) f << ",x_" << (k + 1);
  for (int k = 0; k < n_x; ++k) f << ",f_" << (k + 1);
  f << "\n";
  for (std::size_t i = 0; i < run.size(); ++i) {
    f << csv::fmt(run.times[i]);
    for (int k = 0; k < n_x; ++k) f << "," << csv::fmt(run.x_true[i][k]);
    for (int k = 0; k < n_x; ++k) f << "," << csv::fmt(run.f_true[i][k]);
    f << "\n";
  }
}

NatureRun read_nature_csv(const std::string& path) {
  auto f = csv::open_in(path);
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("empty nature file: " + path);
  const int n_cols = static_cast<int>(csv::split(line).size());
  const int n_x = (n_cols - 1) / 2;

  NatureRun run;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    if (static_cast<int>(cells.size()) != n_cols)
      throw std::runtime_error("ragged row in nature file: " + path);
    run.times.push_back(csv::to_double(cells[0]));
    Vector x(n_x), fv(n_x);
    for (int k = 0; k < n_x; ++k) x[k] = csv::to_double(cells[1 + k]);
    for (int k = 0; k < n_x; ++k) fv[k] = csv::to_double(cells[1 + n_x + k]);
    run.x_true.push_back(std::move(x));
    run.f_true.push_back(std::move(fv));
  }
  return run;
}

void write_observations_csv(const std::string& path,
                            const std::vector<ObservationBatch>& batches) {
  auto f = csv::open_out(path);
  f << "time_mtu,location,value,error_variance\n";
  for (const auto& batch : batches)
    for (const auto& e : batch.entries)
      f << csv::fmt(batch.time) << "," << (e.location + 1) << ","
        << csv::fmt(e.value) << "," << csv::fmt(e.error_variance) << "\n";
}

std::vector<ObservationBatch> read_observations_csv(const std::string& path) {
  auto f = csv::open_in(path);
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("empty observation file: " + path);

  std::vector<ObservationBatch> batches;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != 4)
      throw std::runtime_error("bad observation row in " + path);
    const double t = csv::to_double(cells[0]);
    ObsEntry e;
    e.location = static_cast<int>(csv::to_double(cells[1])) - 1;
    e.value = csv::to_double(cells[2]);
    e.error_variance = csv::to_double(cells[3]);
    e.kind = ObsKind::State;
    if (batches.empty() || batches.back().time != t) {
      ObservationBatch b;
      b.time = t;
      batches.push_back(b);
    }
    batches.back().entries.push_back(e);
  }
  return batches;
}

}  // namespace hoope
