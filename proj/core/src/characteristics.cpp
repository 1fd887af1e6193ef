#include "vmtorus/characteristics.hpp"

#include <cmath>

namespace vmt {

std::vector<TrajectorySample> integrate(PhaseState start, const ForceSpec& force, double t0,
                                        double t1, double dt) {
  std::vector<TrajectorySample> out;
  out.reserve(size_t((t1 - t0) / dt) + 2);
  integrate_observe(start, force, t0, t1, dt,
                    [&](double t, const PhaseState& s) { out.push_back({t, s.x, s.v}); });
  return out;
}

double angle_rate(Vec2 V, double b_at_x, LightSpeed c) {
  double n = norm(V);
  if (n == 0.0) throw std::invalid_argument("angle_rate: |V| = 0");
  return b_at_x / lorentz_root(V, c);
}

double angle_rate_perturbed(Vec2 V, double b_at_x, LightSpeed c, Vec2 F, Vec2 v_ref) {
  double base = angle_rate(V, b_at_x, c);
  double nV = norm(V), nref = norm(v_ref);
  if (nref == 0.0) throw std::invalid_argument("angle_rate_perturbed: |v_ref| = 0");
  double sin_theta = cross(v_ref, V) / (nref * nV);
  if (sin_theta == 0.0) throw std::invalid_argument("angle_rate_perturbed: sin(theta) = 0");
  Vec2 proj = v_ref - (dot(v_ref, V) / (nV * nV)) * V;  // projection on {V}^perp
  return base + dot(F, proj) / (nV * nref * sin_theta);
}

double speed_rate(Vec2 V, Vec2 F) {
  double n = norm(V);
  if (n == 0.0) throw std::invalid_argument("speed_rate: |V| = 0");
  return dot(F, V) / n;
}

GronwallReport gronwall_compare(PhaseState start, const ForceSpec& base_force, double b_W1inf,
                                const std::function<Vec2(double, Vec2, Vec2)>& F_extra,
                                double F_sup, double T, double dt, int record_stride) {
  ForceSpec perturbed = base_force;
  perturbed.F_extra = F_extra;
  perturbed.F_extra_sup = F_sup;

  int steps = std::max(1, int(std::ceil(T / dt - 1e-12)));
  double h = T / steps;
  PhaseState a = start, b = start;

  GronwallReport report;
  double v0 = norm(start.v);
  double rate = b_W1inf * (1.0 + 2.0 * v0);
  for (int i = 0; i <= steps; ++i) {
    double t = i * h;
    if (i % record_stride == 0 || i == steps) {
      double devV = norm(a.v - b.v);
      double devX = torus_dist(a.x, b.x);
      double boundV = F_sup * std::exp(rate * t);
      double boundX = t * boundV;
      bool okV = devV <= boundV + 1e-15;
      bool okX = (i == 0) ? devX == 0.0 : devX <= boundX + 1e-15;
      if (!(okV && okX)) report.pass = false;
      if (boundV > 0.0) report.worst_ratio = std::max(report.worst_ratio, devV / boundV);
      if (i > 0 && boundX > 0.0)
        report.worst_ratio = std::max(report.worst_ratio, devX / boundX);
      report.rows.push_back({t, devV, devX, boundV, boundX});
    }
    if (i < steps) {
      double tc = i * h;
      a = rk4_step(a, base_force, tc, h);
      b = rk4_step(b, perturbed, tc, h);
    }
  }
  return report;
}

}  // namespace vmt
