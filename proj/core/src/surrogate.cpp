#include "hoope/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "csv_util.hpp"

namespace hoope {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Matrix gram(const Vector& inputs, double s2, double ell, double jitter) {
  const int n = static_cast<int>(inputs.size());
  Matrix k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = GPModel::matern52(std::abs(inputs[i] - inputs[j]), s2, ell);
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += jitter;
  }
  return k;
}

std::vector<double> log_space(double lo, double hi, int count) {
  std::vector<double> out(count);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    out[i] = std::exp(llo + (lhi - llo) * i / std::max(1, count - 1));
  return out;
}

}  // namespace

double GPModel::matern52(double r, double signal_variance, double length_scale) {
  const double t = std::sqrt(5.0) * r / length_scale;
  return signal_variance * (1.0 + t + t * t / 3.0) * std::exp(-t);
}

GPModel::Column GPModel::fit_column(const Vector& inputs, const Vector& targets,
                                    double signal_variance, double length_scale,
                                    double jitter_start, bool fixed_jitter) {
  Column col;
  col.signal_variance = signal_variance;
  col.length_scale = length_scale;
  col.target_mean = targets.mean();
  const double var =
      (targets.array() - col.target_mean).square().sum() /
      std::max<int>(1, static_cast<int>(targets.size()) - 1);
  col.target_std = var > 0.0 ? std::sqrt(var) : 1.0;

  const Vector y = (targets.array() - col.target_mean) / col.target_std;

  double jitter = jitter_start;
  while (true) {
    Matrix k = gram(inputs, signal_variance, length_scale, jitter);
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() == Eigen::Success) {
      col.jitter = jitter;
      col.chol = std::move(llt);
      col.alpha = col.chol.solve(y);
      return col;
    }
    if (fixed_jitter || jitter >= 1e-2)
      throw std::runtime_error("GP Gram matrix singular after jitter escalation");
    jitter *= 10.0;
  }
}

GPModel::Column GPModel::fit_column_search(const Vector& inputs,
                                           const Vector& targets) {
  const double range =
      inputs.maxCoeff() - inputs.minCoeff();
  const auto ell_grid = log_space(range / 100.0, range * 10.0, 20);
  // Targets are standardized to unit variance before the search, so the
  // signal-variance grid brackets 1.
  const auto s2_grid = log_space(0.1, 10.0, 10);

  const int n = static_cast<int>(inputs.size());
  double best_lml = -std::numeric_limits<double>::infinity();
  Column best;
  bool found = false;

  const double mean = targets.mean();
  const double var = (targets.array() - mean).square().sum() / std::max(1, n - 1);
  const double tstd = var > 0.0 ? std::sqrt(var) : 1.0;
  const Vector y = (targets.array() - mean) / tstd;

  for (double s2 : s2_grid) {
    for (double ell : ell_grid) {
      double jitter = 1e-8;
      Eigen::LLT<Matrix> llt;
      while (true) {
        Matrix k = gram(inputs, s2, ell, jitter);
        llt.compute(k);
        if (llt.info() == Eigen::Success) break;
        if (jitter >= 1e-2) break;
        jitter *= 10.0;
      }
      if (llt.info() != Eigen::Success) continue;
      const Vector alpha = llt.solve(y);
      double log_det = 0.0;
      for (int i = 0; i < n; ++i) log_det += std::log(llt.matrixLLT()(i, i));
      const double lml =
          -0.5 * y.dot(alpha) - log_det - 0.5 * n * std::log(kTwoPi);
      if (lml > best_lml) {
        best_lml = lml;
        best.signal_variance = s2;
        best.length_scale = ell;
        best.jitter = jitter;
        best.target_mean = mean;
        best.target_std = tstd;
        best.chol = llt;
        best.alpha = alpha;
        found = true;
      }
    }
  }
  if (!found)
    throw std::runtime_error("GP hyperparameter search found no valid fit");
  return best;
}

GPModel GPModel::fit(const Vector& inputs, const Matrix& targets,
                     SurrogateMode mode) {
  if (!inputs.allFinite()) throw std::invalid_argument("GP inputs must be finite");
  std::set<double> distinct(inputs.begin(), inputs.end());
  if (distinct.size() < 3)
    throw std::invalid_argument("GP fit needs at least 3 distinct inputs");
  if (targets.rows() != inputs.size())
    throw std::invalid_argument("GP targets/inputs size mismatch");

  GPModel model;
  model.mode_ = mode;
  model.inputs_ = inputs;
  model.targets_ = targets;
  for (int c = 0; c < targets.cols(); ++c)
    model.columns_.push_back(fit_column_search(inputs, targets.col(c)));
  return model;
}

GPModel GPModel::fit_fixed(const Vector& inputs, const Matrix& targets,
                           SurrogateMode mode, double signal_variance,
                           double length_scale, double jitter) {
  if (!inputs.allFinite()) throw std::invalid_argument("GP inputs must be finite");
  if (targets.rows() != inputs.size())
    throw std::invalid_argument("GP targets/inputs size mismatch");

  GPModel model;
  model.mode_ = mode;
  model.inputs_ = inputs;
  model.targets_ = targets;
  for (int c = 0; c < targets.cols(); ++c)
    model.columns_.push_back(fit_column(inputs, targets.col(c), signal_variance,
                                        length_scale, jitter, true));
  return model;
}

GPPrediction GPModel::predict(double theta) const {
  if (!std::isfinite(theta))
    throw std::invalid_argument("GP prediction input must be finite");
  if (columns_.empty()) throw std::logic_error("GP model not fitted");

  const int n = n_train();
  GPPrediction out;
  out.mean.resize(n_outputs());
  out.variance.resize(n_outputs());
  Vector kstar(n);
  for (int c = 0; c < n_outputs(); ++c) {
    const Column& col = columns_[c];
    for (int i = 0; i < n; ++i)
      kstar[i] = matern52(std::abs(theta - inputs_[i]), col.signal_variance,
                          col.length_scale);
    const double mean_std = kstar.dot(col.alpha);
    const Vector v = col.chol.matrixL().solve(kstar);
    double var_std = col.signal_variance - v.squaredNorm();
    if (var_std < 0.0) var_std = 0.0;
    out.mean[c] = col.target_mean + col.target_std * mean_std;
    out.variance[c] = col.target_std * col.target_std * var_std;
  }
  return out;
}

void GPModel::save(const std::string& path) const {
  auto f = csv::open_out(path);
  f << "# gp surrogate v1\n";
  f << "mode "
    << (mode_ == SurrogateMode::IndexVector ? "index-vector" : "squared-misfit")
    << "\n";
  f << "n_train " << n_train() << " n_outputs " << n_outputs() << "\n";
  f << "columns signal_variance length_scale jitter target_mean target_std\n";
  for (const auto& col : columns_)
    f << csv::fmt(col.signal_variance) << " " << csv::fmt(col.length_scale)
      << " " << csv::fmt(col.jitter) << " " << csv::fmt(col.target_mean) << " "
      << csv::fmt(col.target_std) << "\n";
  f << "data input target_1..target_m\n";
  for (int i = 0; i < n_train(); ++i) {
    f << csv::fmt(inputs_[i]);
    for (int c = 0; c < n_outputs(); ++c) f << " " << csv::fmt(targets_(i, c));
    f << "\n";
  }
}

GPModel GPModel::load(const std::string& path) {
  auto f = csv::open_in(path);
  std::string line, word;

  std::getline(f, line);  // banner
  f >> word >> word;
  const SurrogateMode mode = word == "squared-misfit"
                                 ? SurrogateMode::SquaredMisfit
                                 : SurrogateMode::IndexVector;
  int n = 0, m = 0;
  f >> word >> n >> word >> m;
  std::getline(f, line);
  std::getline(f, line);  // columns header

  struct Hyper {
    double s2, ell, jitter;
  };
  std::vector<Hyper> hypers(m);
  for (int c = 0; c < m; ++c) {
    double tm, ts;
    f >> hypers[c].s2 >> hypers[c].ell >> hypers[c].jitter >> tm >> ts;
  }
  std::getline(f, line);
  std::getline(f, line);  // data header

  Vector inputs(n);
  Matrix targets(n, m);
  for (int i = 0; i < n; ++i) {
    f >> inputs[i];
    for (int c = 0; c < m; ++c) f >> targets(i, c);
  }
  if (!f) throw std::runtime_error("truncated GP model file: " + path);

  GPModel model;
  model.mode_ = mode;
  model.inputs_ = inputs;
  model.targets_ = targets;
  for (int c = 0; c < m; ++c)
    model.columns_.push_back(fit_column(inputs, targets.col(c), hypers[c].s2,
                                        hypers[c].ell, hypers[c].jitter, true));
  return model;
}

}  // namespace hoope
