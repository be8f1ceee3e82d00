#include <benchmark/benchmark.h>

#include "hoope/enkf.hpp"
#include "hoope/hoope.hpp"
#include "hoope/models.hpp"
#include "hoope/rng.hpp"

using namespace hoope;

namespace {

TwoScaleState attractor_state(const ModelConstants& c) {
  RngStream rng(5);
  TwoScaleState s;
  s.x.resize(c.n_x);
  s.v.resize(c.n_x * c.n_z);
  for (int i = 0; i < c.n_x; ++i) s.x[i] = rng.normal();
  for (int j = 0; j < c.n_x * c.n_z; ++j) s.v[j] = 0.1 * rng.normal();
  advance_two_scale(s, c, 5 * c.steps_per_mtu());
  return s;
}

AugmentedEnsemble make_ensemble(int n_x, int k, std::uint64_t seed) {
  RngStream rng(seed);
  AugmentedEnsemble ens;
  ens.n_x = n_x;
  ens.members.resize(2 * n_x, k);
  for (int i = 0; i < 2 * n_x; ++i)
    for (int j = 0; j < k; ++j) ens.members(i, j) = rng.normal(10.0, 2.0);
  return ens;
}

std::vector<ObsEntry> make_obs(std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<ObsEntry> obs;
  for (int g : {0, 1, 4, 5})
    obs.push_back({g, rng.normal(10.0, 2.0), 0.01, ObsKind::State});
  return obs;
}

}  // namespace

static void BM_TwoScaleInterval(benchmark::State& state) {
  ModelConstants c;
  TwoScaleState s = attractor_state(c);
  for (auto _ : state) {
    advance_two_scale(s, c, c.steps_per_interval());
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_TwoScaleInterval);

static void BM_SingleScaleInterval(benchmark::State& state) {
  ModelConstants c;
  SingleScaleState s;
  s.x = Vector::Constant(c.n_x, 5.0);
  ParameterField f;
  f.f = Vector::Constant(c.n_x, 14.0);
  for (auto _ : state) {
    advance_single_scale(s, f, c, c.steps_per_interval());
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_SingleScaleInterval);

static void BM_LocalSolve(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  RngStream rng(17);
  Matrix y(4, k);
  for (int i = 0; i < y.size(); ++i) y(i / k, i % k) = rng.normal();
  Vector d(4), r_inv(4);
  for (int i = 0; i < 4; ++i) {
    d[i] = rng.normal();
    r_inv[i] = 100.0;
  }
  for (auto _ : state) {
    const LocalAnalysis la = letkf_local_solve(y, d, r_inv);
    benchmark::DoNotOptimize(la.w_mean.data());
  }
}
BENCHMARK(BM_LocalSolve)->Arg(10)->Arg(20)->Arg(40);

static void BM_AnalyzeCycle(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  AugmentedEnsemble ens = make_ensemble(9, k, 3);
  const auto obs = make_obs(4);
  LocalizationConfig loc;
  InflationConfig inf;
  inf.rho_x = 1.2;
  inf.rho_theta = 1.2;
  for (auto _ : state) {
    AnalysisResult res = analyze(ens, obs, loc, inf);
    benchmark::DoNotOptimize(res.ensemble.members.data());
  }
}
BENCHMARK(BM_AnalyzeCycle)->Arg(10)->Arg(20)->Arg(40);

static void BM_RtcTransform(benchmark::State& state) {
  AugmentedEnsemble ens = make_ensemble(9, 20, 8);
  ClimatologyPrior prior;
  prior.theta_c = Vector::Constant(9, 14.0);
  prior.c_diag = Vector::Constant(9, 9.0);
  const Vector rho = Vector::Constant(9, 1.5);
  for (auto _ : state) {
    const RtcTransformed t = rtc_transform(ens.param_block(), prior, rho);
    benchmark::DoNotOptimize(t.new_mean.data());
  }
}
BENCHMARK(BM_RtcTransform);

BENCHMARK_MAIN();
