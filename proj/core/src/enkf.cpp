#include "hoope/enkf.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace hoope {

double grid_distance(int i, int j, int n_x) {
  const int diff = std::abs(i - j);
  return static_cast<double>(std::min(diff, n_x - diff));
}

double taper(double r, const LocalizationConfig& cfg) {
  if (r < 0.0) throw std::invalid_argument("distance must be nonnegative");
  if (r >= cfg.cutoff()) return 0.0;
  const double z = r / cfg.sigma;
  return std::exp(-0.5 * z * z);
}

AugmentedEnsemble inflate_fixed(const AugmentedEnsemble& ens, double rho_x,
                                double rho_theta) {
  if (rho_x < 1.0 || rho_theta < 1.0)
    throw std::invalid_argument("multiplicative inflation factors must be >= 1");
  const Vector mean = ens.mean();
  Matrix pert = ens.members.colwise() - mean;
  pert.topRows(ens.n_x) *= std::sqrt(rho_x);
  pert.bottomRows(ens.n_x) *= std::sqrt(rho_theta);

  AugmentedEnsemble out;
  out.n_x = ens.n_x;
  out.members = pert.colwise() + mean;
  return out;
}

LocalAnalysis letkf_local_solve(const Matrix& y_pert, const Vector& innovation,
                                const Vector& tapered_r_inv) {
  const int k = static_cast<int>(y_pert.cols());
  if (k < 2) throw std::invalid_argument("ensemble size must be >= 2");
  if (y_pert.rows() != innovation.size() ||
      y_pert.rows() != tapered_r_inv.size())
    throw std::invalid_argument("observation dimension mismatch");
  if ((tapered_r_inv.array() < 0.0).any())
    throw std::invalid_argument("tapered R^-1 entries must be >= 0");

  LocalAnalysis out;
  const Matrix inner =
      (k - 1) * Matrix::Identity(k, k) +
      y_pert.transpose() * tapered_r_inv.asDiagonal() * y_pert;

  Eigen::SelfAdjointEigenSolver<Matrix> es(inner);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed in local solve");
  // Eigenvalues are >= k-1 analytically; the floor only guards rounding.
  const Vector eigs = es.eigenvalues().cwiseMax(1e-12);
  const Matrix& q = es.eigenvectors();

  out.p_tilde_a = q * eigs.cwiseInverse().asDiagonal() * q.transpose();
  out.w_matrix = std::sqrt(static_cast<double>(k - 1)) * q *
                 eigs.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  out.w_mean = out.p_tilde_a *
               (y_pert.transpose() * tapered_r_inv.cwiseProduct(innovation));
  return out;
}

double adaptive_inflation_update(const Vector& innovation, const Matrix& y_pert,
                                 const Vector& tapered_r_inv,
                                 double effective_obs_count, double rho_prior,
                                 double prior_variance, double rho_min,
                                 double rho_max) {
  const int k = static_cast<int>(y_pert.cols());
  const double p = effective_obs_count;
  if (p <= 0.0) return rho_prior;

  double trace_term = 0.0;
  for (int j = 0; j < y_pert.rows(); ++j)
    trace_term += tapered_r_inv[j] * y_pert.row(j).squaredNorm();
  trace_term /= std::max(1, k - 1);
  if (!(trace_term > 0.0)) return rho_prior;

  const double stat = innovation.cwiseProduct(tapered_r_inv).dot(innovation);
  const double rho_obs = (stat - p) / trace_term;
  const double rel = (rho_prior * trace_term + p) / trace_term;
  const double obs_variance = 2.0 / p * rel * rel;

  double rho =
      (rho_obs * prior_variance + rho_prior * obs_variance) /
      (prior_variance + obs_variance);
  return std::clamp(rho, rho_min, rho_max);
}

namespace {

// Row of the augmented vector an observation entry reads.
int observed_row(const ObsEntry& e, int n_x) {
  if (e.kind == ObsKind::State) {
    if (e.location < 0 || e.location >= n_x)
      throw std::invalid_argument("state observation location out of range");
    return e.location;
  }
  if (e.location < 0 || e.location >= n_x)
    throw std::invalid_argument("pseudo observation index out of range");
  return n_x + e.location;
}

// Taper for one analyzed variable / observation pair. Pseudo observations
// touch only their own parameter; state observations use grid distance for
// both X[k] and F[k] located at grid k.
double variable_taper(int var, const ObsEntry& e, int n_x,
                      const LocalizationConfig& loc) {
  const int grid = var % n_x;
  if (e.kind == ObsKind::PseudoParameter)
    return (var >= n_x && (var - n_x) == e.location) ? 1.0 : 0.0;
  return taper(grid_distance(grid, e.location, n_x), loc);
}

}  // namespace

AnalysisResult analyze(const AugmentedEnsemble& ens,
                       const std::vector<ObsEntry>& obs,
                       const LocalizationConfig& loc, InflationConfig& inf) {
  const int k = ens.size();
  const int n_x = ens.n_x;
  const int n_vars = 2 * n_x;
  if (k < 2) throw std::invalid_argument("ensemble size must be >= 2");
  if (ens.n_rows() != n_vars)
    throw std::invalid_argument("ensemble rows inconsistent with n_x");

  const int n_obs = static_cast<int>(obs.size());
  const Vector mean = ens.mean();
  const Matrix pert = ens.members.colwise() - mean;

  std::vector<int> obs_rows(n_obs);
  for (int j = 0; j < n_obs; ++j) obs_rows[j] = observed_row(obs[j], n_x);

  // Adaptive estimates use the raw background spread: the estimate targets
  // the total factor needed, so last cycle's inflation must not feed back.
  if (inf.mode == InflationMode::Adaptive) {
    if (inf.adaptive.rho.size() != n_vars) inf.adaptive.reset(n_vars);
    for (int a = 0; a < n_vars; ++a) {
      Vector r_inv(n_obs), d(n_obs);
      Matrix y(n_obs, k);
      int m = 0;
      double taper_sum = 0.0;
      for (int j = 0; j < n_obs; ++j) {
        const double t = variable_taper(a, obs[j], n_x, loc);
        if (t <= 0.0) continue;
        y.row(m) = pert.row(obs_rows[j]);
        r_inv[m] = t / obs[j].error_variance;
        d[m] = obs[j].value - mean[obs_rows[j]];
        taper_sum += t;
        ++m;
      }
      if (m == 0) continue;
      inf.adaptive.rho[a] = adaptive_inflation_update(
          d.head(m), y.topRows(m), r_inv.head(m), taper_sum,
          inf.adaptive.rho[a], inf.adaptive.prior_variance,
          inf.adaptive.rho_min, inf.adaptive.rho_max);
    }
  }

  // Prior multiplicative inflation, row-wise.
  Matrix inflated = pert;
  for (int a = 0; a < n_vars; ++a) {
    double rho = 1.0;
    if (inf.mode == InflationMode::Fixed)
      rho = a < n_x ? inf.rho_x : inf.rho_theta;
    else
      rho = inf.adaptive.rho[a];
    if (a >= n_x && !inf.inflate_parameter_block) rho = 1.0;
    inflated.row(a) *= std::sqrt(rho);
  }

  AnalysisResult result;
  result.ensemble.n_x = n_x;
  result.ensemble.members.resize(n_vars, k);

  Matrix y(n_obs, k);
  Vector r_inv(n_obs), d(n_obs);
  for (int a = 0; a < n_vars; ++a) {
    int m = 0;
    for (int j = 0; j < n_obs; ++j) {
      const double t = variable_taper(a, obs[j], n_x, loc);
      if (t <= 0.0) continue;
      y.row(m) = inflated.row(obs_rows[j]);
      r_inv[m] = t / obs[j].error_variance;
      d[m] = obs[j].value - mean[obs_rows[j]];
      ++m;
    }
    if (m == 0) {
      // No effective observations: analysis keeps the inflated background.
      result.ensemble.members.row(a) =
          inflated.row(a).array() + mean[a];
      continue;
    }
    const LocalAnalysis la =
        letkf_local_solve(y.topRows(m), d.head(m), r_inv.head(m));
    const double mean_update = inflated.row(a).dot(la.w_mean);
    result.ensemble.members.row(a) =
        (inflated.row(a) * la.w_matrix).array() + mean[a] + mean_update;
  }

  result.diverged = !result.ensemble.members.allFinite() ||
                    result.ensemble.members.cwiseAbs().maxCoeff() >
                        kDivergenceLimit;
  return result;
}

}  // namespace hoope
