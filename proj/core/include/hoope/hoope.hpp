#pragma once

#include <vector>

#include "hoope/batchopt.hpp"
#include "hoope/enkf.hpp"

namespace hoope {

/// Appends one pseudo observation per parameter index to the batch:
/// value theta_c[i], variance c_diag[i]. Downstream, analyze's taper rule
/// restricts each to its own parameter variable.
ObservationBatch pso_augment(const ObservationBatch& obs,
                             const ClimatologyPrior& prior);

/// Parameter block after the regression-to-climatology move.
struct RtcTransformed {
  Vector new_mean;           ///< per parameter
  Matrix new_perturbations;  ///< n_params x k, sample mean zero
};

/// Per-parameter product of the background Gaussian (sample moments,
/// variance denominator k-1) with the climatology N(theta_c, c_diag),
/// with the multiplicative inflation factor folded in:
///   mean  = (rho s_b^2 theta_c + s_c^2 mean_b) / (s_c^2 + rho s_b^2)
///   scale = sqrt(rho) s_c / sqrt(s_c^2 + rho s_b^2)
/// rho may be one factor per parameter (adaptive) or broadcast scalar.
RtcTransformed rtc_transform(const Matrix& theta_block,
                             const ClimatologyPrior& prior,
                             const Vector& rho_theta);
RtcTransformed rtc_transform(const Matrix& theta_block,
                             const ClimatologyPrior& prior, double rho_theta);

/// Replaces the parameter block of the ensemble in place; the state block
/// is kept intact.
void rtc_apply(AugmentedEnsemble& ens, const ClimatologyPrior& prior,
               const Vector& rho_theta);

/// Variance multiplier of the parameter spread under RTC:
/// rho s_c^2 / (s_c^2 + rho s_b^2).
double effective_inflation(double rho_theta, double sigma_c2, double sigma_b2);

/// Moments of the augmented background Gaussian in block form.
struct GaussianBlocks {
  Vector x_mean;
  Vector theta_mean;
  Matrix bx;   ///< state covariance
  Matrix bxt;  ///< state-parameter cross covariance
  Matrix bt;   ///< parameter covariance
};

/// Closed-form product of the augmented background with the climatology
/// Gaussian over the parameters:
///   x~  = x_mean + Bxt (C+Bt)^-1 (theta_c - theta_mean)
///   t~  = C (C+Bt)^-1 theta_mean + Bt (C+Bt)^-1 theta_c
///   Bx~ = Bx - Bxt (C+Bt)^-1 Btx
///   Bxt~= Bxt (C+Bt)^-1 C
///   Bt~ = (C^-1 + Bt^-1)^-1
GaussianBlocks combine_background_climatology_exact(const GaussianBlocks& in,
                                                    const Vector& theta_c,
                                                    const Matrix& c);

/// Verification oracle for the closed forms: embeds the climatology term in
/// a full-rank Gaussian with pseudo covariance delta*I over the state block
/// and combines by dense precision addition. Converges to the closed forms
/// as delta grows; useful range roughly delta in [1e6, 1e10] before
/// conditioning (kappa ~ delta/scale / 1e-16) erodes the agreement.
GaussianBlocks combine_delta_limit_oracle(const GaussianBlocks& in,
                                          const Vector& theta_c,
                                          const Matrix& c, double delta);

/// Gaussian-to-Gaussian optimal transport map applied to sample columns:
/// T(v) = dst_mean + Bs^-1/2 (Bs^1/2 Bd Bs^1/2)^1/2 Bs^-1/2 (v - src_mean).
Matrix ot_map_general(const Matrix& samples, const Vector& src_mean,
                      const Matrix& src_cov, const Vector& dst_mean,
                      const Matrix& dst_cov);

}  // namespace hoope
