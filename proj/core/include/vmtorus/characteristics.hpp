#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "vmtorus/grid.hpp"

namespace vmt {

/// Speed of light, with the classical limit (c = infinity) as an explicit
/// mode rather than a large float.
struct LightSpeed {
  double value = 1.0;
  bool finite = true;

  static LightSpeed infinite() { return {0.0, false}; }
  static LightSpeed of(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("LightSpeed: c must be positive");
    return {c, true};
  }
};

/// sqrt(1 + |v|^2/c^2); 1 in the classical mode.
inline double lorentz_root(Vec2 v, LightSpeed c) {
  if (!c.finite) return 1.0;
  return std::sqrt(1.0 + (v.x * v.x + v.y * v.y) / (c.value * c.value));
}

/// Relativistic velocity v / sqrt(1 + |v|^2/c^2); identity in the classical mode.
inline Vec2 relativistic_velocity(Vec2 v, LightSpeed c) {
  if (!c.finite) return v;
  return v / lorentz_root(v, c);
}

/// Force acting on a phase-space point:
///   F(t,x,v) = E(t,x) + v_hat^perp * b(t,x) + F_extra(t,x,v).
/// b is the effective scalar magnetic coefficient multiplying v_hat^perp
/// (pass B/c for the self-consistent system, or an external b directly).
struct ForceSpec {
  std::function<Vec2(double, Vec2)> E;
  std::function<double(double, Vec2)> b;
  bool b_is_const = false;
  double b_const = 0.0;
  LightSpeed c;
  std::function<Vec2(double, Vec2, Vec2)> F_extra;
  double F_extra_sup = 0.0;

  static ForceSpec constant_b(double b_value, LightSpeed c) {
    ForceSpec f;
    f.b_is_const = true;
    f.b_const = b_value;
    f.c = c;
    return f;
  }

  Vec2 force(double t, Vec2 x, Vec2 v) const {
    Vec2 vhat = relativistic_velocity(v, c);
    Vec2 acc{0.0, 0.0};
    if (E) acc += E(t, x);
    double bv = b_is_const ? b_const : (b ? b(t, x) : 0.0);
    if (bv != 0.0) acc += vhat.perp() * bv;
    if (F_extra) acc += F_extra(t, x, v);
    return acc;
  }
};

struct PhaseState {
  Vec2 x;  // torus position, components in [0,1)
  Vec2 v;  // velocity, unbounded
};

struct TrajectorySample {
  double t;
  Vec2 x, v;
};

/// One classical RK4 step of dx/dt = v_hat(v), dv/dt = F(t,x,v).
inline PhaseState rk4_step(const PhaseState& s, const ForceSpec& f, double t, double dt) {
  auto vh = [&](Vec2 v) { return relativistic_velocity(v, f.c); };
  Vec2 k1x = vh(s.v);
  Vec2 k1v = f.force(t, s.x, s.v);
  Vec2 k2x = vh(s.v + 0.5 * dt * k1v);
  Vec2 k2v = f.force(t + 0.5 * dt, torus_wrap(s.x + 0.5 * dt * k1x), s.v + 0.5 * dt * k1v);
  Vec2 k3x = vh(s.v + 0.5 * dt * k2v);
  Vec2 k3v = f.force(t + 0.5 * dt, torus_wrap(s.x + 0.5 * dt * k2x), s.v + 0.5 * dt * k2v);
  Vec2 k4x = vh(s.v + dt * k3v);
  Vec2 k4v = f.force(t + dt, torus_wrap(s.x + dt * k3x), s.v + dt * k3v);
  PhaseState out;
  out.x = torus_wrap(s.x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x));
  out.v = s.v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return out;
}

/// Fixed-step RK4 over [t0, t1]; the observer sees every substep including
/// the initial state: obs(t, state). Throws on non-finite state.
template <class Observer>
void integrate_observe(PhaseState s, const ForceSpec& f, double t0, double t1, double dt,
                       Observer&& obs) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  int steps = std::max(1, int(std::ceil((t1 - t0) / dt - 1e-12)));
  double h = (t1 - t0) / steps;
  double t = t0;
  obs(t, s);
  for (int i = 0; i < steps; ++i) {
    s = rk4_step(s, f, t, h);
    t = t0 + (i + 1) * h;
    if (!std::isfinite(s.x.x) || !std::isfinite(s.x.y) || !std::isfinite(s.v.x) ||
        !std::isfinite(s.v.y))
      throw std::runtime_error("integrate: non-finite state encountered");
    obs(t, s);
  }
}

/// Fixed-step RK4 trajectory with all substeps recorded.
std::vector<TrajectorySample> integrate(PhaseState start, const ForceSpec& force, double t0,
                                        double t1, double dt);

/// Rotation rate of the velocity direction under v_hat^perp b:
/// theta' = b(x) / sqrt(1 + |V|^2/c^2). Throws if |V| = 0.
double angle_rate(Vec2 V, double b_at_x, LightSpeed c);

/// Angle rate including the perturbation projection term: the extra force F
/// contributes F . p_{V^perp}(v_ref) / (|V| |v_ref| sin theta), where theta is
/// the signed angle from v_ref to V. Requires sin(theta) != 0.
double angle_rate_perturbed(Vec2 V, double b_at_x, LightSpeed c, Vec2 F, Vec2 v_ref);

/// d|V|/dt = F . V / |V|.
double speed_rate(Vec2 V, Vec2 F);

struct GronwallRow {
  double t;
  double devV, devX;      // measured deviations (perturbed vs unperturbed)
  double boundV, boundX;  // F_sup exp(b_W1inf (1+2|v|) t), t * same
};

struct GronwallReport {
  std::vector<GronwallRow> rows;
  bool pass = true;       // measured <= bound at every recorded step
  double worst_ratio = 0.0;
};

/// Integrates the flows with and without the extra force from the same start
/// and checks the deviation bounds
///   |V - Vbar| <= ||F||_inf exp(||b||_{W^{1,inf}} (1+2|v|) t),
///   |X - Xbar| <= t * ||F||_inf exp(||b||_{W^{1,inf}} (1+2|v|) t).
GronwallReport gronwall_compare(PhaseState start, const ForceSpec& base_force, double b_W1inf,
                                const std::function<Vec2(double, Vec2, Vec2)>& F_extra,
                                double F_sup, double T, double dt, int record_stride = 1);

}  // namespace vmt
