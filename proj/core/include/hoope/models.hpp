#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace hoope {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Observation/analysis interval of the twin experiment, in MTU.
inline constexpr double kObsIntervalMtu = 0.05;

/// Constants of the two-scale Lorenz96 system and its single-scale forecast
/// counterpart. One model time unit (MTU) spans 1/dt integration steps of
/// length dt, i.e. 1.0 in nondimensional time; with the default dt that is
/// 2000 RK4 steps per MTU and 100 steps per 0.05-MTU observation interval.
struct ModelConstants {
  int n_x = 9;               ///< large-scale grid count N_x
  int n_z = 20;              ///< fast variables per grid N_z
  double forcing = 14.0;     ///< external forcing S
  double timescale = 0.7;    ///< fast/slow time-scale separation xi
  double coupling_hx = -2.0; ///< coupling h_x (fast -> slow)
  double coupling_hz = 1.0;  ///< coupling h_z (slow -> fast)
  double dt = 5.0e-4;        ///< RK4 step

  int steps_per_mtu() const { return static_cast<int>(std::lround(1.0 / dt)); }
  int steps_per_interval() const {
    return static_cast<int>(std::lround(kObsIntervalMtu / dt));
  }

  /// Throws std::invalid_argument on constants the stencils cannot handle
  /// (n_x, n_z < 4, nonpositive dt, zero timescale).
  void validate() const;
};

/// Truth-model state: slow variables x (length n_x) and fast variables v
/// stored as one periodic ring of length n_x*n_z. Flattened index
/// j = k*n_z + l holds the fast variable at slow grid k, sub-index l
/// (all 0-based); advancing l past n_z-1 continues into grid k+1 and the
/// ring wraps at the end, so the fast stencil is a plain mod-(n_x*n_z)
/// neighborhood.
struct TwoScaleState {
  Vector x;
  Vector v;
};

/// Forecast-model state: slow variables only.
struct SingleScaleState {
  Vector x;
};

/// Per-grid forcing parameter F of the forecast model. The truth value is
/// F[k] = S + U[k] with U the sub-grid coupling tendency.
struct ParameterField {
  Vector f;
};

/// Sub-grid tendency U[k] = (h_x / n_z) * sum_l V[l,k].
Vector coupling_tendency(const TwoScaleState& state, const ModelConstants& c);

/// dX[k]/dt = -X[k-1](X[k-2]-X[k+1]) - X[k] + S + U[k]
/// dV[j]/dt = (1/xi)(-V[j+1](V[j+2]-V[j-1]) - V[j] + h_z X[k(j)])
TwoScaleState tendency_two_scale(const TwoScaleState& state,
                                 const ModelConstants& c);

/// dX[k]/dt = -X[k-1](X[k-2]-X[k+1]) - X[k] + F[k]
SingleScaleState tendency_single_scale(const SingleScaleState& state,
                                       const ParameterField& params,
                                       const ModelConstants& c);

/// Classical fourth-order Runge-Kutta step for a generic autonomous ODE.
Vector rk4_step(const Vector& y,
                const std::function<Vector(const Vector&)>& tendency,
                double dt);

TwoScaleState rk4_step(const TwoScaleState& state, const ModelConstants& c,
                       double dt);
SingleScaleState rk4_step(const SingleScaleState& state,
                          const ParameterField& params,
                          const ModelConstants& c, double dt);

/// In-place integration over n_steps RK4 steps of length c.dt.
/// Scratch is reused across steps, so these are the hot paths for the
/// nature run, the offline ensemble and the forecast cycles.
void advance_two_scale(TwoScaleState& state, const ModelConstants& c,
                       int n_steps);
void advance_single_scale(SingleScaleState& state, const ParameterField& params,
                          const ModelConstants& c, int n_steps);

/// True if every entry of the state is finite.
bool is_finite(const TwoScaleState& state);

}  // namespace hoope
