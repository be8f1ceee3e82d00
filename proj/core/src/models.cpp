#include "hoope/models.hpp"

#include <cmath>
#include <stdexcept>

namespace hoope {

void ModelConstants::validate() const {
  if (n_x < 4) throw std::invalid_argument("n_x must be >= 4 (advection stencil)");
  if (n_z < 4) throw std::invalid_argument("n_z must be >= 4 (advection stencil)");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (timescale == 0.0) throw std::invalid_argument("timescale xi must be nonzero");
}

namespace {

// Slow-variable advection + damping + forcing, shared by both models.
// work[k] = -x[k-1](x[k-2]-x[k+1]) - x[k] + force[k]
inline void slow_tendency(const Vector& x, const Vector& force, Vector& out) {
  const int n = static_cast<int>(x.size());
  for (int k = 0; k < n; ++k) {
    const int km1 = (k + n - 1) % n;
    const int km2 = (k + n - 2) % n;
    const int kp1 = (k + 1) % n;
    out[k] = -x[km1] * (x[km2] - x[kp1]) - x[k] + force[k];
  }
}

inline void fast_tendency(const Vector& x, const Vector& v,
                          const ModelConstants& c, Vector& out) {
  const int m = static_cast<int>(v.size());
  const double inv_xi = 1.0 / c.timescale;
  for (int j = 0; j < m; ++j) {
    const int jp1 = (j + 1) % m;
    const int jp2 = (j + 2) % m;
    const int jm1 = (j + m - 1) % m;
    const int k = j / c.n_z;
    out[j] =
        inv_xi * (-v[jp1] * (v[jp2] - v[jm1]) - v[j] + c.coupling_hz * x[k]);
  }
}

}  // namespace

Vector coupling_tendency(const TwoScaleState& state, const ModelConstants& c) {
  Vector u(c.n_x);
  const double scale = c.coupling_hx / static_cast<double>(c.n_z);
  for (int k = 0; k < c.n_x; ++k)
    u[k] = scale * state.v.segment(k * c.n_z, c.n_z).sum();
  return u;
}

TwoScaleState tendency_two_scale(const TwoScaleState& state,
                                 const ModelConstants& c) {
  TwoScaleState d;
  d.x.resize(c.n_x);
  d.v.resize(c.n_x * c.n_z);
  Vector force = coupling_tendency(state, c);
  force.array() += c.forcing;
  slow_tendency(state.x, force, d.x);
  fast_tendency(state.x, state.v, c, d.v);
  return d;
}

SingleScaleState tendency_single_scale(const SingleScaleState& state,
                                       const ParameterField& params,
                                       const ModelConstants& c) {
  SingleScaleState d;
  d.x.resize(c.n_x);
  slow_tendency(state.x, params.f, d.x);
  return d;
}

Vector rk4_step(const Vector& y,
                const std::function<Vector(const Vector&)>& tendency,
                double dt) {
  const Vector k1 = tendency(y);
  const Vector k2 = tendency(y + 0.5 * dt * k1);
  const Vector k3 = tendency(y + 0.5 * dt * k2);
  const Vector k4 = tendency(y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

TwoScaleState rk4_step(const TwoScaleState& state, const ModelConstants& c,
                       double dt) {
  ModelConstants cc = c;
  cc.dt = dt;
  TwoScaleState out = state;
  advance_two_scale(out, cc, 1);
  return out;
}

SingleScaleState rk4_step(const SingleScaleState& state,
                          const ParameterField& params,
                          const ModelConstants& c, double dt) {
  ModelConstants cc = c;
  cc.dt = dt;
  SingleScaleState out = state;
  advance_single_scale(out, params, cc, 1);
  return out;
}

void advance_two_scale(TwoScaleState& state, const ModelConstants& c,
                       int n_steps) {
  const int n = c.n_x;
  const int m = c.n_x * c.n_z;
  const double dt = c.dt;
  const double fast_scale = c.coupling_hx / static_cast<double>(c.n_z);

  Vector force(n);
  Vector kx1(n), kx2(n), kx3(n), kx4(n), xs(n);
  Vector kv1(m), kv2(m), kv3(m), kv4(m), vs(m);

  auto eval = [&](const Vector& x, const Vector& v, Vector& dx, Vector& dv) {
    for (int k = 0; k < n; ++k)
      force[k] = c.forcing + fast_scale * v.segment(k * c.n_z, c.n_z).sum();
    slow_tendency(x, force, dx);
    fast_tendency(x, v, c, dv);
  };

  for (int step = 0; step < n_steps; ++step) {
    eval(state.x, state.v, kx1, kv1);
    xs = state.x + 0.5 * dt * kx1;
    vs = state.v + 0.5 * dt * kv1;
    eval(xs, vs, kx2, kv2);
    xs = state.x + 0.5 * dt * kx2;
    vs = state.v + 0.5 * dt * kv2;
    eval(xs, vs, kx3, kv3);
    xs = state.x + dt * kx3;
    vs = state.v + dt * kv3;
    eval(xs, vs, kx4, kv4);
    state.x += (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    state.v += (dt / 6.0) * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
  }
}

void advance_single_scale(SingleScaleState& state, const ParameterField& params,
                          const ModelConstants& c, int n_steps) {
  const int n = c.n_x;
  const double dt = c.dt;
  Vector k1(n), k2(n), k3(n), k4(n), xs(n);

  for (int step = 0; step < n_steps; ++step) {
    slow_tendency(state.x, params.f, k1);
    xs = state.x + 0.5 * dt * k1;
    slow_tendency(xs, params.f, k2);
    xs = state.x + 0.5 * dt * k2;
    slow_tendency(xs, params.f, k3);
    xs = state.x + dt * k3;
    slow_tendency(xs, params.f, k4);
    state.x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

bool is_finite(const TwoScaleState& state) {
  return state.x.allFinite() && state.v.allFinite();
}

}  // namespace hoope
