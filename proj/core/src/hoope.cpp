#include "hoope/hoope.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace hoope {

namespace {

Matrix symmetric_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("matrix is not positive semidefinite");
  const Vector eigs = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * eigs.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Matrix symmetric_inv_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("matrix is not positive definite");
  return es.eigenvectors() *
         es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

ObservationBatch pso_augment(const ObservationBatch& obs,
                             const ClimatologyPrior& prior) {
  ObservationBatch out = obs;
  out.entries.reserve(out.entries.size() + prior.size());
  for (int i = 0; i < prior.size(); ++i) {
    if (!(prior.c_diag[i] > 0.0))
      throw std::invalid_argument("climatology variance must be positive");
    ObsEntry e;
    e.location = i;
    e.value = prior.theta_c[i];
    e.error_variance = prior.c_diag[i];
    e.kind = ObsKind::PseudoParameter;
    out.entries.push_back(e);
  }
  return out;
}

RtcTransformed rtc_transform(const Matrix& theta_block,
                             const ClimatologyPrior& prior,
                             const Vector& rho_theta) {
  const int n = static_cast<int>(theta_block.rows());
  const int k = static_cast<int>(theta_block.cols());
  if (prior.size() != n || rho_theta.size() != n)
    throw std::invalid_argument("parameter dimension mismatch in RTC");
  if (k < 2) throw std::invalid_argument("ensemble size must be >= 2");

  RtcTransformed out;
  out.new_mean.resize(n);
  out.new_perturbations.resize(n, k);
  for (int i = 0; i < n; ++i) {
    const double sc2 = prior.c_diag[i];
    if (!(sc2 > 0.0))
      throw std::invalid_argument("climatology variance must be positive");
    const double rho = rho_theta[i];
    const double mean_b = theta_block.row(i).mean();
    const Eigen::RowVectorXd pert =
        theta_block.row(i).array() - mean_b;
    const double sb2 = pert.squaredNorm() / (k - 1);

    const double denom = sc2 + rho * sb2;
    out.new_mean[i] =
        (rho * sb2 * prior.theta_c[i] + sc2 * mean_b) / denom;
    const double scale = std::sqrt(rho) * std::sqrt(sc2) / std::sqrt(denom);
    out.new_perturbations.row(i) = scale * pert;
  }
  return out;
}

RtcTransformed rtc_transform(const Matrix& theta_block,
                             const ClimatologyPrior& prior, double rho_theta) {
  return rtc_transform(
      theta_block, prior,
      Vector::Constant(theta_block.rows(), rho_theta));
}

void rtc_apply(AugmentedEnsemble& ens, const ClimatologyPrior& prior,
               const Vector& rho_theta) {
  const RtcTransformed t = rtc_transform(ens.param_block(), prior, rho_theta);
  ens.param_block() = t.new_perturbations.colwise() + t.new_mean;
}

double effective_inflation(double rho_theta, double sigma_c2, double sigma_b2) {
  if (!(sigma_c2 > 0.0) || !(sigma_b2 > 0.0))
    throw std::invalid_argument("variances must be positive");
  return rho_theta * sigma_c2 / (sigma_c2 + rho_theta * sigma_b2);
}

GaussianBlocks combine_background_climatology_exact(const GaussianBlocks& in,
                                                    const Vector& theta_c,
                                                    const Matrix& c) {
  const Matrix sum = c + in.bt;
  Eigen::LLT<Matrix> llt(sum);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("C + B_theta is not positive definite");
  // M = (C + Bt)^-1 once; every closed form reuses it.
  const Matrix m = llt.solve(Matrix::Identity(sum.rows(), sum.cols()));

  GaussianBlocks out;
  out.x_mean = in.x_mean + in.bxt * m * (theta_c - in.theta_mean);
  out.theta_mean = c * m * in.theta_mean + in.bt * m * theta_c;
  out.bx = in.bx - in.bxt * m * in.bxt.transpose();
  out.bxt = in.bxt * m * c;
  out.bt = (c.inverse() + in.bt.inverse()).inverse();
  return out;
}

GaussianBlocks combine_delta_limit_oracle(const GaussianBlocks& in,
                                          const Vector& theta_c,
                                          const Matrix& c, double delta) {
  const int nx = static_cast<int>(in.x_mean.size());
  const int nt = static_cast<int>(in.theta_mean.size());
  const int n = nx + nt;

  Matrix b(n, n);
  b.topLeftCorner(nx, nx) = in.bx;
  b.topRightCorner(nx, nt) = in.bxt;
  b.bottomLeftCorner(nt, nx) = in.bxt.transpose();
  b.bottomRightCorner(nt, nt) = in.bt;

  Matrix a = Matrix::Zero(n, n);
  a.topLeftCorner(nx, nx) = delta * Matrix::Identity(nx, nx);
  a.bottomRightCorner(nt, nt) = c;

  // Product of the two Gaussians by dense precision addition; the pseudo
  // climatological mean over x is arbitrary (taken as 0) and drops out in
  // the delta limit.
  Vector mean_b(n), mean_a(n);
  mean_b << in.x_mean, in.theta_mean;
  mean_a << Vector::Zero(nx), theta_c;

  const Matrix b_inv = b.inverse();
  const Matrix a_inv = a.inverse();
  const Matrix cov = (b_inv + a_inv).inverse();
  const Vector mean = cov * (b_inv * mean_b + a_inv * mean_a);

  GaussianBlocks out;
  out.x_mean = mean.head(nx);
  out.theta_mean = mean.tail(nt);
  out.bx = cov.topLeftCorner(nx, nx);
  out.bxt = cov.topRightCorner(nx, nt);
  out.bt = cov.bottomRightCorner(nt, nt);
  return out;
}

Matrix ot_map_general(const Matrix& samples, const Vector& src_mean,
                      const Matrix& src_cov, const Vector& dst_mean,
                      const Matrix& dst_cov) {
  const Matrix src_sqrt = symmetric_sqrt(src_cov);
  const Matrix src_inv_sqrt = symmetric_inv_sqrt(src_cov);
  const Matrix middle = symmetric_sqrt(src_sqrt * dst_cov * src_sqrt);
  const Matrix map = src_inv_sqrt * middle * src_inv_sqrt;

  return (map * (samples.colwise() - src_mean)).colwise() + dst_mean;
}

}  // namespace hoope
