#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hoope/surrogate.hpp"
#include "hoope/synth.hpp"

namespace hoope {

/// Trimmed-uniform parameter prior: hard bounds, flat inside.
struct ParameterPrior {
  double lower = 0.0;
  double upper = 30.0;
};

/// Post-burn-in Metropolis-Hastings output.
struct McmcChain {
  std::vector<double> samples;
  long n_total = 0;
  long n_burnin = 0;
  long n_out_of_bounds = 0;      ///< proposals rejected by the trimmed prior
  double acceptance_rate = 0.0;  ///< accepted candidates / n_total
};

/// Gaussian climatology N(theta_c, C) over the parameter field; one scalar
/// mean/variance broadcast across all parameter indices, C diagonal.
struct ClimatologyPrior {
  Vector theta_c;
  Vector c_diag;

  int size() const { return static_cast<int>(theta_c.size()); }
  void save(const std::string& path) const;
  static ClimatologyPrior load(const std::string& path);
};

/// Negative log-likelihood of a candidate parameter through the surrogate.
/// Index-vector mode:  0.5 * sum_i (gamma_obs_i - mu_i)^2 / (Rgp_i + Ro_i).
/// Squared-misfit mode: 0.5 * mu / (Rgp + Ro), with mu the predicted misfit.
double log_misfit_phi(const GPModel& model, double theta,
                      const ClimIndex& gamma_obs, const Vector& r_o);

/// Random-walk Metropolis-Hastings with a zero-mean Gaussian proposal.
/// Candidates outside the prior bounds are rejected before evaluating phi;
/// otherwise acceptance is u <= min(1, exp(phi(current) - phi(candidate))).
/// The chain starts at the prior midpoint. Deterministic given the seed.
McmcChain mh_sample(const std::function<double(double)>& phi,
                    const ParameterPrior& prior, double proposal_std,
                    long n_total, long n_burnin, std::uint64_t seed);

/// Sample mean and variance (denominator n-1) of the chain, broadcast to
/// n_params entries.
ClimatologyPrior fit_gaussian(const McmcChain& chain, int n_params);

/// One sample per row, header "sample".
void write_chain_csv(const std::string& path, const McmcChain& chain);

}  // namespace hoope
