#pragma once

#include <functional>

#include "vmtorus/characteristics.hpp"
#include "vmtorus/grid.hpp"

namespace vmt {

/// Velocity-space profiles on B(0,1):
///   Z   radial, with  int Z dv = 1,  int Z v_hat dv = 0 (odd symmetry);
///   Z_i = s * d/dv_i of the radial bump, with  int Z_i dv = 0 and
///         int Z_i v_hat dv = e_i  after the one-scalar normalization.
/// v_hat uses the reference light speed fixed at construction, so lifted
/// currents are independent of the run's c by design. Z_i are signed: the
/// moment pair (zero mass, unit current) admits no nonnegative solution.
class BumpProfile {
 public:
  BumpProfile(int quad_n, LightSpeed c_ref);

  double Z(Vec2 v) const;
  double Z1(Vec2 v) const { return zi_scale_ * dbump(v).x; }
  double Z2(Vec2 v) const { return zi_scale_ * dbump(v).y; }

  LightSpeed c_ref() const { return c_ref_; }
  int quad_n() const { return quad_n_; }

  // quadrature residuals recorded at construction
  double mass_Z_error() const { return mass_Z_error_; }
  double current_Z_error() const { return current_Z_error_; }
  double mass_Zi_error() const { return mass_Zi_error_; }
  double current_Zi_error() const { return current_Zi_error_; }

  /// Midpoint quadrature of f over the velocity box [-1,1]^2 at quad_n^2
  /// points (superalgebraic for smooth compactly supported integrands).
  static double integrate(int quad_n, const std::function<double(Vec2)>& f);

 private:
  static double bump(Vec2 v);    // exp(-1/(1-|v|^2)) on B(0,1)
  static Vec2 dbump(Vec2 v);     // gradient of the bump

  int quad_n_;
  LightSpeed c_ref_;
  double z_scale_ = 1.0;
  double zi_scale_ = 1.0;
  double mass_Z_error_ = 0.0, current_Z_error_ = 0.0;
  double mass_Zi_error_ = 0.0, current_Zi_error_ = 0.0;
};

/// make_bumps: profiles with moments verified to 1e-8 (throws otherwise).
BumpProfile make_bumps(int quad_n, LightSpeed c_ref);

/// Phase-space lift f(x,v) = Z1(v) j1(x) + Z2(v) j2(x): zero charge density
/// and current density exactly j, pointwise in x.
class LiftedDistribution {
 public:
  LiftedDistribution(const BumpProfile& bumps, std::function<Vec2(Vec2)> j)
      : bumps_(bumps), j_(std::move(j)) {}

  double operator()(Vec2 x, Vec2 v) const {
    Vec2 j = j_(x);
    return bumps_.Z1(v) * j.x + bumps_.Z2(v) * j.y;
  }
  /// int f dv at x (zero up to the profile's quadrature residual).
  double charge_density(Vec2 x) const { return 0.0 * norm(j_(x)); }
  /// int f v_hat dv at x (the prescribed current).
  Vec2 current_density(Vec2 x) const { return j_(x); }
  const BumpProfile& bumps() const { return bumps_; }

 private:
  BumpProfile bumps_;
  std::function<Vec2(Vec2)> j_;
};

LiftedDistribution lift_current(const BumpProfile& bumps, std::function<Vec2(Vec2)> j);

}  // namespace vmt
