#include "hoope/batchopt.hpp"

#include <cmath>
#include <stdexcept>

#include "csv_util.hpp"
#include "hoope/rng.hpp"

namespace hoope {

double log_misfit_phi(const GPModel& model, double theta,
                      const ClimIndex& gamma_obs, const Vector& r_o) {
  const GPPrediction pred = model.predict(theta);
  if (!pred.mean.allFinite())
    throw std::runtime_error("non-finite surrogate prediction");

  if (model.mode() == SurrogateMode::SquaredMisfit) {
    if (r_o.size() < 1 || !(r_o[0] > 0.0))
      throw std::invalid_argument("observation index variance must be positive");
    return 0.5 * pred.mean[0] / (pred.variance[0] + r_o[0]);
  }

  if (gamma_obs.values.size() != pred.mean.size() ||
      r_o.size() != pred.mean.size())
    throw std::invalid_argument("index dimension mismatch in phi");
  double phi = 0.0;
  for (int i = 0; i < pred.mean.size(); ++i) {
    if (!(r_o[i] > 0.0))
      throw std::invalid_argument("observation index variance must be positive");
    const double resid = gamma_obs.values[i] - pred.mean[i];
    phi += 0.5 * resid * resid / (pred.variance[i] + r_o[i]);
  }
  return phi;
}

McmcChain mh_sample(const std::function<double(double)>& phi,
                    const ParameterPrior& prior, double proposal_std,
                    long n_total, long n_burnin, std::uint64_t seed) {
  if (!(prior.lower < prior.upper))
    throw std::invalid_argument("prior bounds inverted");
  if (!(proposal_std > 0.0))
    throw std::invalid_argument("proposal std must be positive");
  if (n_burnin < 0 || n_burnin >= n_total)
    throw std::invalid_argument("burn-in must lie inside the chain");

  RngStream rng(seed);
  double current = 0.5 * (prior.lower + prior.upper);
  double phi_current = phi(current);

  McmcChain chain;
  chain.n_total = n_total;
  chain.n_burnin = n_burnin;
  chain.samples.reserve(static_cast<std::size_t>(n_total - n_burnin));

  long accepted = 0;
  for (long j = 0; j < n_total; ++j) {
    const double candidate = current + proposal_std * rng.normal();
    // Trimmed uniform prior: out-of-bounds candidates are rejected without
    // evaluating phi, but the uniform draw is still consumed so the stream
    // stays aligned across targets.
    const double b = rng.uniform01();
    if (candidate >= prior.lower && candidate <= prior.upper) {
      const double phi_candidate = phi(candidate);
      const double alpha = std::exp(phi_current - phi_candidate);
      if (b <= std::min(1.0, alpha)) {
        current = candidate;
        phi_current = phi_candidate;
        ++accepted;
      }
    } else {
      ++chain.n_out_of_bounds;
    }
    if (j >= n_burnin) chain.samples.push_back(current);
  }
  chain.acceptance_rate = static_cast<double>(accepted) / n_total;
  return chain;
}

ClimatologyPrior fit_gaussian(const McmcChain& chain, int n_params) {
  if (chain.samples.empty()) throw std::invalid_argument("empty chain");
  if (n_params < 1) throw std::invalid_argument("n_params must be positive");

  const long n = static_cast<long>(chain.samples.size());
  double mean = 0.0;
  for (double s : chain.samples) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : chain.samples) var += (s - mean) * (s - mean);
  var /= std::max<long>(1, n - 1);
  if (!(var > 0.0)) throw std::domain_error("zero-variance chain");

  ClimatologyPrior prior;
  prior.theta_c = Vector::Constant(n_params, mean);
  prior.c_diag = Vector::Constant(n_params, var);
  return prior;
}

void ClimatologyPrior::save(const std::string& path) const {
  auto f = csv::open_out(path);
  f << "# theta_c c_diag\n";
  for (int i = 0; i < size(); ++i)
    f << csv::fmt(theta_c[i]) << " " << csv::fmt(c_diag[i]) << "\n";
}

ClimatologyPrior ClimatologyPrior::load(const std::string& path) {
  auto f = csv::open_in(path);
  std::string line;
  std::vector<double> tc, cd;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    double a = 0.0, b = 0.0;
    if (std::sscanf(line.c_str(), "%lf %lf", &a, &b) != 2)
      throw std::runtime_error("bad prior row in " + path);
    tc.push_back(a);
    cd.push_back(b);
  }
  if (tc.empty()) throw std::runtime_error("empty prior file: " + path);
  ClimatologyPrior prior;
  prior.theta_c = Eigen::Map<const Vector>(tc.data(), static_cast<int>(tc.size()));
  prior.c_diag = Eigen::Map<const Vector>(cd.data(), static_cast<int>(cd.size()));
  return prior;
}

void write_chain_csv(const std::string& path, const McmcChain& chain) {
  auto f = csv::open_out(path);
  f << "sample\n";
  for (double s : chain.samples) f << csv::fmt(s) << "\n";
}

}  // namespace hoope
