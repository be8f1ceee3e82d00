#pragma once

#include <vector>

#include "hoope/models.hpp"
#include "hoope/synth.hpp"

namespace hoope {

/// Ensemble of augmented vectors [x ; f]: one column per member, rows
/// 0..n_x-1 the slow state, rows n_x..2n_x-1 the parameter field. The
/// parameter at grid k is located at grid k for localization purposes.
struct AugmentedEnsemble {
  Matrix members;  // (2 n_x) x k
  int n_x = 0;

  int size() const { return static_cast<int>(members.cols()); }
  int n_rows() const { return static_cast<int>(members.rows()); }

  Vector mean() const { return members.rowwise().mean(); }
  /// Member deviations from the ensemble mean, same shape as members.
  Matrix perturbations() const {
    return members.colwise() - members.rowwise().mean().eval();
  }

  auto state_block() { return members.topRows(n_x); }
  auto param_block() { return members.bottomRows(n_x); }
  auto state_block() const { return members.topRows(n_x); }
  auto param_block() const { return members.bottomRows(n_x); }
};

/// Gaussian observation-localization taper with a hard cutoff at
/// 2 sqrt(10/3) sigma, applied multiplicatively to R^{-1}.
struct LocalizationConfig {
  double sigma = 3.0;
  double cutoff() const { return 2.0 * std::sqrt(10.0 / 3.0) * sigma; }
};

/// Periodic grid distance min(|i-j|, n_x - |i-j|).
double grid_distance(int i, int j, int n_x);

/// L(r) = exp(-r^2 / (2 sigma^2)) for r < cutoff, 0 at and beyond it.
double taper(double r, const LocalizationConfig& cfg);

enum class InflationMode { Fixed, Adaptive };

/// Per-analyzed-variable adaptive multiplicative inflation following the
/// Gaussian (innovation-statistics) approach: each cycle produces an
/// observation-space estimate that is blended with the running value by a
/// scalar Kalman update with constant prior variance, then clamped.
///
/// The clamp ceiling matters for augmented parameters: they have no
/// dynamics, so estimates above ~2 let the parameter spread ratchet up
/// faster than the analysis can contract it and the forecast eventually
/// blows up. The [1.0, 2.0] default keeps the plain augmented filter
/// bounded over long runs.
struct AdaptiveInflationState {
  Vector rho;                   ///< one factor per analyzed variable (2 n_x)
  double prior_variance = 0.04; ///< v_b
  double rho_min = 1.0;
  double rho_max = 2.0;
  double rho_init = 1.05;

  void reset(int n_vars) { rho = Vector::Constant(n_vars, rho_init); }
};

struct InflationConfig {
  InflationMode mode = InflationMode::Fixed;
  double rho_x = 1.0;
  double rho_theta = 1.0;
  AdaptiveInflationState adaptive;
  /// RTC pre-transforms the parameter block (inflation folded into the
  /// transform), so analyze must not inflate those rows again. Adaptive
  /// estimates are still updated either way.
  bool inflate_parameter_block = true;
};

/// Ensemble-space solution of one local analysis (Hunt et al. 2007 form).
struct LocalAnalysis {
  Vector w_mean;    ///< k
  Matrix p_tilde_a; ///< k x k, SPD
  Matrix w_matrix;  ///< k x k, symmetric sqrt of (k-1) p_tilde_a
};

/// Solves P_a = [(k-1)I + Y^T R^-1 Y]^-1, w = P_a Y^T R^-1 d and
/// W = [(k-1) P_a]^{1/2} (symmetric square root via eigendecomposition,
/// eigenvalues floored at 1e-12). `tapered_r_inv` holds taper/variance per
/// observation row; zero entries drop the observation.
LocalAnalysis letkf_local_solve(const Matrix& y_pert, const Vector& innovation,
                                const Vector& tapered_r_inv);

/// Scales x-block perturbations by sqrt(rho_x) and parameter-block
/// perturbations by sqrt(rho_theta); means unchanged.
AugmentedEnsemble inflate_fixed(const AugmentedEnsemble& ens, double rho_x,
                                double rho_theta);

/// One Gaussian-approach update of a scalar inflation estimate.
/// Observation-space estimate rho_o = (d^T W d - p) / trace(W Y Y^T / (k-1))
/// with W = diag(tapered_r_inv) and p the effective observation count
/// (the taper sum); its error variance is v_o = (2/p) ((rho_b T + p)/T)^2.
/// Returns the clamped Kalman blend; keeps the prior when the trace term
/// vanishes (no ensemble spread in observation space).
double adaptive_inflation_update(const Vector& innovation, const Matrix& y_pert,
                                 const Vector& tapered_r_inv,
                                 double effective_obs_count, double rho_prior,
                                 double prior_variance, double rho_min,
                                 double rho_max);

struct AnalysisResult {
  AugmentedEnsemble ensemble;
  bool diverged = false;
};

/// Full analysis step: one local LETKF solve per analyzed scalar variable
/// (each X[k], each F[k]); observations are selected and R^-1 tapered per
/// variable; prior multiplicative inflation (fixed or adaptive) is applied
/// to the background perturbations before the solves. Pseudo-parameter
/// observations influence only the parameter variable with the matching
/// index (taper 1 there, 0 elsewhere). A member magnitude above 1e6 or a
/// non-finite value marks the cycle diverged.
AnalysisResult analyze(const AugmentedEnsemble& ens,
                       const std::vector<ObsEntry>& obs,
                       const LocalizationConfig& loc, InflationConfig& inf);

/// Divergence guard threshold shared with the harness.
inline constexpr double kDivergenceLimit = 1e6;

}  // namespace hoope
