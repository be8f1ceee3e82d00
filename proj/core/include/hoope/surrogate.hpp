#pragma once

#include <string>
#include <vector>

#include "hoope/models.hpp"

namespace hoope {

/// What the surrogate regresses on: the climatological index itself
/// (one GP per index component) or the scalar squared misfit against the
/// observed index.
enum class SurrogateMode { IndexVector, SquaredMisfit };

struct GPPrediction {
  Vector mean;      ///< per output column
  Vector variance;  ///< per output column, clamped to >= 0
};

/// Gaussian-process regression of a scalar parameter against one or more
/// targets with the Matern-5/2 kernel
///   k(r) = s2 (1 + sqrt5 r/l + 5 r^2/(3 l^2)) exp(-sqrt5 r/l).
///
/// Targets are standardized internally (zero mean, unit variance) with a
/// zero prior mean; predictions are mapped back to original units. Each
/// output column is an independent single-output GP. Hyperparameters come
/// from a deterministic grid search maximizing the log marginal likelihood;
/// the Gram jitter escalates tenfold from 1e-8 (relative to the
/// standardized target variance) up to 1e-2 when the Cholesky fails.
class GPModel {
 public:
  /// Unfitted model; predict() throws until assigned from fit()/load().
  GPModel() = default;

  /// Grid-searched fit. Needs at least 3 distinct finite inputs.
  static GPModel fit(const Vector& inputs, const Matrix& targets,
                     SurrogateMode mode);

  /// Fit with pinned hyperparameters (shared by all columns); no search.
  static GPModel fit_fixed(const Vector& inputs, const Matrix& targets,
                           SurrogateMode mode, double signal_variance,
                           double length_scale, double jitter);

  GPPrediction predict(double theta) const;

  SurrogateMode mode() const { return mode_; }
  int n_outputs() const { return static_cast<int>(columns_.size()); }
  int n_train() const { return static_cast<int>(inputs_.size()); }

  double signal_variance(int col) const { return columns_.at(col).signal_variance; }
  double length_scale(int col) const { return columns_.at(col).length_scale; }
  double jitter(int col) const { return columns_.at(col).jitter; }
  double target_mean(int col) const { return columns_.at(col).target_mean; }
  double target_std(int col) const { return columns_.at(col).target_std; }

  /// Flat text round-trip so downstream stages can reload without refitting.
  void save(const std::string& path) const;
  static GPModel load(const std::string& path);

  static double matern52(double r, double signal_variance, double length_scale);

 private:
  struct Column {
    double signal_variance = 1.0;  // standardized units
    double length_scale = 1.0;
    double jitter = 1e-8;
    double target_mean = 0.0;  // un-standardization
    double target_std = 1.0;
    Eigen::LLT<Matrix> chol;   // of K + jitter I
    Vector alpha;              // (K + jitter I)^{-1} y_std
  };

  static Column fit_column(const Vector& inputs, const Vector& targets,
                           double signal_variance, double length_scale,
                           double jitter_start, bool fixed_jitter);
  static Column fit_column_search(const Vector& inputs, const Vector& targets);

  SurrogateMode mode_ = SurrogateMode::IndexVector;
  Vector inputs_;
  Matrix targets_;  // original units, one column per output
  std::vector<Column> columns_;
};

}  // namespace hoope
