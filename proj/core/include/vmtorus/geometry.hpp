#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vmtorus/characteristics.hpp"
#include "vmtorus/grid.hpp"

namespace vmt {

struct Ball {
  Vec2 center;
  double radius = 0.0;
};

/// Closed geodesic band: all points within half_width of the line family
/// { x . n = offset (mod spacing) } with direction u = (p, q), gcd = 1.
struct StripSpec {
  int p = 1, q = 0;  // direction u = (p, q), coprime
  double offset = 0.0;
  double half_width = 0.1;

  void validate() const;
  double u_norm() const;
  Vec2 dir() const;          // u / |u|
  Vec2 unit_normal() const;  // n_H = dir().perp() rotated: (-u2, u1)/|u|
  double spacing() const { return 1.0 / u_norm(); }
  /// Perpendicular offset of x from the central line, wrapped to
  /// [-spacing/2, spacing/2).
  double signed_dist(Vec2 x) const;
  /// Unwrapped band coordinate in [0, spacing), measured from the central line.
  double band_coord(Vec2 x) const;
  bool contains(Vec2 x) const { return std::abs(signed_dist(x)) < half_width; }
};

/// Control set on the torus: strip, union of balls, or a boolean node mask.
class ControlSet {
 public:
  enum class Kind { Strip, BallUnion, GridMask };

  static ControlSet strip(const StripSpec& s);
  static ControlSet ball_union(std::vector<Ball> balls);
  static ControlSet grid_mask(GridSpec g, std::vector<uint8_t> mask);

  Kind kind() const { return kind_; }
  bool contains(Vec2 x) const;
  /// Membership in the eps-erosion (ties at the boundary resolve to "out").
  bool contains_eroded(Vec2 x, double eps) const;

  const StripSpec& strip_spec() const { return strip_; }
  const std::vector<Ball>& balls() const { return balls_; }
  const GridSpec& mask_grid() const { return mask_grid_; }

 private:
  Kind kind_ = Kind::BallUnion;
  StripSpec strip_;
  std::vector<Ball> balls_;
  GridSpec mask_grid_;
  std::vector<uint8_t> mask_;
};

struct GccOptions {
  int n_dirs = 128;     // >= 64
  int n_starts = 1024;  // >= 32^2 (rounded to a square grid)
  double L_max = 20.0;
  double step = 1.0 / 512.0;
  double erosion = -1.0;  // < 0: defaults to one marching step
};

struct GccWitness {
  Vec2 x;
  double angle;  // direction that never hits within L_max
};

/// Resolution-certified geometric control condition check: rays x + y e are
/// marched up to L_max; "hit" means entering the erosion of the set.
struct GccReport {
  bool holds = false;
  double L = 0.0;  // max first-hit length over all sampled rays
  std::optional<GccWitness> witness;
  GccOptions used;
};

GccReport check_gcc(const ControlSet& omega, const GccOptions& opts = {});

/// Rational directions (a, b), gcd(|a|,|b|) = 1, for which some line of that
/// direction on the torus misses B(center, r): exactly those with
/// a^2 + b^2 < 1/(4 r^2) (line-family spacing 1/sqrt(a^2+b^2) exceeds 2r).
/// Returned with both signs, sorted by angle. Empty when r >= 1/2.
std::vector<std::pair<int, int>> enumerate_bad_directions(const Ball& ball);

struct MagneticCertificate {
  bool valid = false;
  int sign = +1;           // +1: b certified, -1: -b certified
  double threshold = 0.0;  // sublevel threshold defining K = {sign*b >= threshold}
  double b_lower = 0.0;    // min of sign*b over K_{2d}
  double b_tilde = 0.0;    // min of sign*b over the torus
  double b_max = 0.0;      // max of sign*b over the torus
  double d = 0.0, D = 0.0;
  double gamma = 0.0;  // D*b_tilde + (d/2)*b_lower
  std::string diagnostic;
  GccReport k_gcc;
};

struct CertifyOptions {
  double d_cap = 0.25;
  int d_bisect_iters = 24;
  GccOptions gcc;
};

/// Certify the bending condition for b (tries -b if b fails): finds a compact
/// sublevel set K = {sign*b >= threshold} satisfying the geometric condition,
/// measures the thickening constants (d, D) by ray marching, and evaluates
/// gamma = D*b_tilde + (d/2)*b_lower.
MagneticCertificate certify_bending(const ScalarField& b, double threshold,
                                    const CertifyOptions& opts = {});

struct BendingParams {
  bool feasible = false;
  std::string binding;  // constraint that failed when infeasible
  double m = 0.0;       // minimal speed
  double c0 = 0.0;      // minimal speed of light
  double tau = 0.0;     // rotation wait time
  double beta = 0.0;    // cone width around the principal bad directions
  int N_bad = 0;        // full bad-direction count at r_enum
  int N_principal = 0;  // |u| <= u_cap subset the cones are placed around
  double L = 0.0;       // max free-flight distance to the enumeration ball
  double T = 0.0;       // total horizon, 4 (T_m + tau)
  double M_bar = 0.0;   // resolved speed cap
  double r_enum = 0.0;  // enumeration/target radius (ball.radius / 4)
  double min_gap = 0.0; // angular gap within the principal set
  double T_m = 0.0;
};

struct DeriveOptions {
  double safety = 0.7;
  double m_floor = 10.0;
  double tau_cap = 50.0;
  double beta_floor = 1e-6;
  double auto_M_bar_factor = 1.25;  // used when M_bar <= 0 on entry
  double c0_factor = 50.0;         // c0 = c0_factor * m
  // Escape cones are placed around the principal bad directions (|u| <=
  // u_cap); beta is their width. The remaining bad directions get narrow
  // guards in the L measurement, sized so that directions outside them hit
  // within L_cap (miss margin / guard ~ L_cap); the continuous rotation cures
  // them without a dedicated wait.
  int u_cap = 2;
  double cone_fraction = 0.45;  // beta <= cone_fraction * min principal gap
  double beta_abs = 0.002;      // absolute cap on the cone width
  double rot_margin = 1.2;      // aimed rotation = rot_margin * beta
  double L_cap = 30.0;
  int L_dirs = 512;
  int L_starts = 144;
  double L_step = 1.0 / 512.0;
};

/// Derive run parameters (m, c0, tau, beta, T) from a bending certificate for
/// the target ball, enforcing
///   T_m = L sqrt(1/m^2 + 1/c0^2) < tau                    (flight-time)
///   (L^2/2) max(1,b_max) sqrt(1/c0^2 + 1/m^2) < r0/8      (deviation budget)
///   beta < tau gamma / (2 sqrt(1+M^2/c0^2) (D + d/2))     (rotation escape)
/// Pass M_bar <= 0 to have the cap auto-set to auto_M_bar_factor * m.
BendingParams derive_bending_params(const MagneticCertificate& cert, const Ball& ball,
                                    double M_bar, const DeriveOptions& opts = {});

struct CensusOptions {
  int nx = 16, ny = 16, n_dirs = 12, n_speeds = 8;
  double dt_space = -1.0;  // spatial step per time step; default ball.radius/16
  bool record_samples = true;
};

struct CensusSample {
  Vec2 x, v;
  double first_hit_in_window = -1.0;  // entry time into B(x0, r0/2) within (T/4, 3T/4)
  bool hit = false;
  bool band_ok = false;  // |v|/2 <= |V(s)| <= 2|v| on [0, T]
};

struct BendingCensus {
  int total = 0;
  int hits = 0;
  int band_ok = 0;
  double hit_fraction = 0.0;
  double band_fraction = 0.0;
  std::vector<CensusSample> samples;
};

/// Integrate characteristics under v_hat^perp b + F_extra from an (x, v)
/// sample grid with speeds in [params.m, params.M_bar]; report the fraction
/// hitting B(x0, r0/2) during (T/4, 3T/4) and the velocity-band condition.
BendingCensus verify_bending_lemma(const BendingParams& params, const Ball& ball,
                                   const std::function<double(Vec2)>& b_field,
                                   const std::function<Vec2(double, Vec2, Vec2)>& F_extra,
                                   double F_sup, double c, const CensusOptions& opts = {});

}  // namespace vmt
