#include "vmtorus/bumps.hpp"

#include <cmath>
#include <stdexcept>

namespace vmt {

double BumpProfile::bump(Vec2 v) {
  double r2 = v.x * v.x + v.y * v.y;
  if (r2 >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r2));
}

Vec2 BumpProfile::dbump(Vec2 v) {
  double r2 = v.x * v.x + v.y * v.y;
  if (r2 >= 1.0) return {0.0, 0.0};
  double one = 1.0 - r2;
  double w = std::exp(-1.0 / one);
  double factor = -2.0 / (one * one) * w;
  return {factor * v.x, factor * v.y};
}

double BumpProfile::integrate(int quad_n, const std::function<double(Vec2)>& f) {
  double h = 2.0 / quad_n;
  double acc = 0.0, comp = 0.0;
  for (int i = 0; i < quad_n; ++i) {
    double vx = -1.0 + (i + 0.5) * h;
    for (int j = 0; j < quad_n; ++j) {
      double vy = -1.0 + (j + 0.5) * h;
      double y = f({vx, vy}) * h * h - comp;
      double t = acc + y;
      comp = (t - acc) - y;
      acc = t;
    }
  }
  return acc;
}

BumpProfile::BumpProfile(int quad_n, LightSpeed c_ref) : quad_n_(quad_n), c_ref_(c_ref) {
  if (quad_n < 64) throw std::invalid_argument("BumpProfile: quadrature resolution must be >= 64");

  double mass = integrate(quad_n, [](Vec2 v) { return bump(v); });
  z_scale_ = 1.0 / mass;

  // int Z v_hat dv vanishes exactly by odd symmetry of the integrand; record
  // the quadrature value anyway.
  Vec2 zcur{integrate(quad_n, [&](Vec2 v) { return bump(v) * relativistic_velocity(v, c_ref_).x; }),
            integrate(quad_n, [&](Vec2 v) { return bump(v) * relativistic_velocity(v, c_ref_).y; })};
  current_Z_error_ = std::max(std::abs(zcur.x), std::abs(zcur.y)) * z_scale_;
  mass_Z_error_ = std::abs(integrate(quad_n, [&](Vec2 v) { return z_scale_ * bump(v); }) - 1.0);

  // One scalar solve: int s dW/dv1 vhat_1 dv = -s int W d(vhat_1)/dv1 dv = 1.
  double D = integrate(quad_n, [&](Vec2 v) { return dbump(v).x * relativistic_velocity(v, c_ref_).x; });
  if (std::abs(D) < 1e-14) throw std::runtime_error("BumpProfile: degenerate moment normalization");
  zi_scale_ = 1.0 / D;

  mass_Zi_error_ = std::abs(integrate(quad_n, [&](Vec2 v) { return Z1(v); }));
  Vec2 cur1{integrate(quad_n, [&](Vec2 v) { return Z1(v) * relativistic_velocity(v, c_ref_).x; }),
            integrate(quad_n, [&](Vec2 v) { return Z1(v) * relativistic_velocity(v, c_ref_).y; })};
  current_Zi_error_ = std::max(std::abs(cur1.x - 1.0), std::abs(cur1.y));

  if (mass_Z_error_ > 1e-8 || current_Z_error_ > 1e-8 || mass_Zi_error_ > 1e-8 ||
      current_Zi_error_ > 1e-8)
    throw std::runtime_error("BumpProfile: moment residual above 1e-8 at this resolution");
}

double BumpProfile::Z(Vec2 v) const { return z_scale_ * bump(v); }

BumpProfile make_bumps(int quad_n, LightSpeed c_ref) { return BumpProfile(quad_n, c_ref); }

LiftedDistribution lift_current(const BumpProfile& bumps, std::function<Vec2(Vec2)> j) {
  return LiftedDistribution(bumps, std::move(j));
}

}  // namespace vmt
