#include "vmtorus/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "vmtorus/parallel.hpp"

namespace vmt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void StripSpec::validate() const {
  if (p == 0 && q == 0) throw std::invalid_argument("StripSpec: zero direction");
  int g = std::gcd(std::abs(p), std::abs(q));
  if (g != 1) throw std::invalid_argument("StripSpec: direction must be coprime");
  if (!(half_width > 0.0)) throw std::invalid_argument("StripSpec: half_width must be positive");
  if (!(half_width < 0.5 * spacing()))
    throw std::invalid_argument("StripSpec: half_width must be below spacing/2");
}

double StripSpec::u_norm() const { return std::hypot(double(p), double(q)); }

Vec2 StripSpec::dir() const {
  double n = u_norm();
  return {p / n, q / n};
}

Vec2 StripSpec::unit_normal() const {
  double n = u_norm();
  return {-q / n, p / n};
}

double StripSpec::signed_dist(Vec2 x) const {
  double s = dot(x, unit_normal()) - offset;
  double sp = spacing();
  return s - sp * std::round(s / sp);
}

double StripSpec::band_coord(Vec2 x) const {
  double s = dot(x, unit_normal()) - offset;
  double sp = spacing();
  double t = s - sp * std::floor(s / sp);
  if (t >= sp) t -= sp;
  return t;
}

ControlSet ControlSet::strip(const StripSpec& s) {
  s.validate();
  ControlSet out;
  out.kind_ = Kind::Strip;
  out.strip_ = s;
  return out;
}

ControlSet ControlSet::ball_union(std::vector<Ball> balls) {
  if (balls.empty()) throw std::invalid_argument("ControlSet: empty ball union");
  for (const auto& b : balls)
    if (!(b.radius > 0.0)) throw std::invalid_argument("ControlSet: ball radius must be positive");
  ControlSet out;
  out.kind_ = Kind::BallUnion;
  out.balls_ = std::move(balls);
  return out;
}

ControlSet ControlSet::grid_mask(GridSpec g, std::vector<uint8_t> mask) {
  g.validate();
  if (int(mask.size()) != g.nodes()) throw std::invalid_argument("ControlSet: mask size mismatch");
  bool any = false;
  for (uint8_t v : mask) any = any || (v != 0);
  if (!any) throw std::invalid_argument("ControlSet: empty mask");
  ControlSet out;
  out.kind_ = Kind::GridMask;
  out.mask_grid_ = g;
  out.mask_ = std::move(mask);
  return out;
}

bool ControlSet::contains(Vec2 x) const {
  switch (kind_) {
    case Kind::Strip:
      return strip_.contains(x);
    case Kind::BallUnion:
      for (const auto& b : balls_)
        if (torus_dist(x, b.center) < b.radius) return true;
      return false;
    case Kind::GridMask: {
      Vec2 w = torus_wrap(x);
      int n = mask_grid_.n;
      int a = int(std::lround(w.x * n)) % n;
      int b = int(std::lround(w.y * n)) % n;
      return mask_[size_t(a) * n + b] != 0;
    }
  }
  return false;
}

bool ControlSet::contains_eroded(Vec2 x, double eps) const {
  switch (kind_) {
    case Kind::Strip: {
      double hw = strip_.half_width - eps;
      return hw > 0.0 && std::abs(strip_.signed_dist(x)) < hw;
    }
    case Kind::BallUnion:
      for (const auto& b : balls_)
        if (torus_dist(x, b.center) < b.radius - eps) return true;
      return false;
    case Kind::GridMask: {
      if (!contains(x)) return false;
      // the 8 surrounding probes at distance eps must be inside too
      for (int i = 0; i < 8; ++i) {
        double a = kTwoPi * i / 8.0;
        if (!contains(torus_wrap(x + Vec2{eps * std::cos(a), eps * std::sin(a)}))) return false;
      }
      return true;
    }
  }
  return false;
}

GccReport check_gcc(const ControlSet& omega, const GccOptions& opts_in) {
  GccOptions opts = opts_in;
  if (opts.n_dirs < 64) throw std::invalid_argument("check_gcc: n_dirs must be >= 64");
  if (opts.n_starts < 1024) throw std::invalid_argument("check_gcc: n_starts must be >= 1024");
  if (opts.erosion < 0.0) opts.erosion = opts.step;

  int G = int(std::lround(std::sqrt(double(opts.n_starts))));
  int total = G * G * opts.n_dirs;
  int march_steps = int(opts.L_max / opts.step) + 1;

  std::vector<double> first_hit(size_t(total), -1.0);
  parallel_for(0, total, [&](int64_t ray) {
    int dir_index = int(ray % opts.n_dirs);
    int start_index = int(ray / opts.n_dirs);
    double angle = kTwoPi * dir_index / opts.n_dirs;
    Vec2 e{std::cos(angle), std::sin(angle)};
    Vec2 x0{(start_index / G + 0.5) / double(G), (start_index % G + 0.5) / double(G)};
    for (int i = 0; i < march_steps; ++i) {
      double y = i * opts.step;
      if (omega.contains_eroded(torus_wrap(x0 + y * e), opts.erosion)) {
        first_hit[size_t(ray)] = y;
        return;
      }
    }
  });

  GccReport report;
  report.used = opts;
  report.holds = true;
  for (int ray = 0; ray < total; ++ray) {
    if (first_hit[size_t(ray)] < 0.0) {
      report.holds = false;
      int dir_index = ray % opts.n_dirs;
      int start_index = ray / opts.n_dirs;
      report.witness = GccWitness{
          Vec2{(start_index / G + 0.5) / double(G), (start_index % G + 0.5) / double(G)},
          kTwoPi * dir_index / opts.n_dirs};
      report.L = opts.L_max;
      return report;
    }
    report.L = std::max(report.L, first_hit[size_t(ray)]);
  }
  return report;
}

std::vector<std::pair<int, int>> enumerate_bad_directions(const Ball& ball) {
  if (!(ball.radius > 0.0)) throw std::invalid_argument("enumerate_bad_directions: radius <= 0");
  std::vector<std::pair<int, int>> out;
  if (ball.radius >= 0.5) return out;  // every line meets a ball of diameter >= 1
  double bound = 1.0 / (4.0 * ball.radius * ball.radius);
  int A = int(std::floor(std::sqrt(bound)));
  for (int a = -A; a <= A; ++a)
    for (int b = -A; b <= A; ++b) {
      if (a == 0 && b == 0) continue;
      if (std::gcd(std::abs(a), std::abs(b)) != 1) continue;
      if (a * a + b * b >= bound) continue;
      // spacing of the line family must exceed the ball diameter
      if (1.0 / std::hypot(double(a), double(b)) <= 2.0 * ball.radius) continue;
      out.emplace_back(a, b);
    }
  std::sort(out.begin(), out.end(), [](auto& l, auto& r) {
    return std::atan2(double(l.second), double(l.first)) <
           std::atan2(double(r.second), double(r.first));
  });
  return out;
}

namespace {

// Torus distance from every node to the nearest node of the mask.
std::vector<double> distance_to_mask(const GridSpec& g, const std::vector<uint8_t>& mask) {
  int n = g.n;
  std::vector<std::pair<int, int>> set_nodes;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (mask[size_t(a) * n + b]) set_nodes.emplace_back(a, b);
  std::vector<double> dist(size_t(n) * n, 1.0);
  parallel_for(0, n, [&](int64_t a) {
    for (int b = 0; b < n; ++b) {
      double best = 2.0;
      for (auto [ka, kb] : set_nodes) {
        double dx = double(int(a) - ka) / n;
        double dy = double(b - kb) / n;
        dx -= std::round(dx);
        dy -= std::round(dy);
        double d2 = dx * dx + dy * dy;
        if (d2 < best) best = d2;
      }
      dist[size_t(a) * n + b] = std::sqrt(best);
    }
  });
  return dist;
}

struct SignAttempt {
  MagneticCertificate cert;
  bool ok = false;
};

SignAttempt certify_one_sign(const ScalarField& b, double threshold, int sign,
                             const CertifyOptions& opts) {
  SignAttempt attempt;
  MagneticCertificate& cert = attempt.cert;
  cert.sign = sign;
  cert.threshold = threshold;
  const GridSpec g = b.grid;
  int n = g.n;

  std::vector<uint8_t> K(size_t(n) * n, 0);
  bool any = false;
  double b_tilde = 1e300, b_max = -1e300;
  for (int i = 0; i < g.nodes(); ++i) {
    double v = sign * b.values[size_t(i)];
    b_tilde = std::min(b_tilde, v);
    b_max = std::max(b_max, v);
    if (v >= threshold) {
      K[size_t(i)] = 1;
      any = true;
    }
  }
  cert.b_tilde = b_tilde;
  cert.b_max = b_max;
  if (!any) {
    cert.diagnostic = "sublevel set K is empty at this threshold";
    return attempt;
  }

  ControlSet K_set = ControlSet::grid_mask(g, K);
  cert.k_gcc = check_gcc(K_set, opts.gcc);
  if (!cert.k_gcc.holds) {
    cert.diagnostic = "K fails the geometric condition at this resolution";
    return attempt;
  }

  auto dist = distance_to_mask(g, K);

  auto min_over_thickening = [&](double radius) {
    double mn = 1e300;
    for (int i = 0; i < g.nodes(); ++i)
      if (dist[size_t(i)] <= radius) mn = std::min(mn, sign * b.values[size_t(i)]);
    return mn;
  };

  // Largest d <= d_cap with sign*b >= threshold/2 on K_{2d} (bisection).
  double d = opts.d_cap;
  if (min_over_thickening(2.0 * opts.d_cap) < 0.5 * threshold) {
    double lo = 0.0, hi = opts.d_cap;
    for (int it = 0; it < opts.d_bisect_iters; ++it) {
      double mid = 0.5 * (lo + hi);
      if (min_over_thickening(2.0 * mid) >= 0.5 * threshold)
        lo = mid;
      else
        hi = mid;
    }
    d = lo;
  }
  if (!(d > 0.0)) {
    cert.diagnostic = "no positive thickening d found";
    return attempt;
  }
  cert.d = d;
  cert.b_lower = min_over_thickening(2.0 * d);

  // D: max over sampled rays of the first time t such that the ray stays in
  // K_d for a duration d/2.
  std::vector<uint8_t> Kd(size_t(n) * n, 0);
  for (int i = 0; i < g.nodes(); ++i) Kd[size_t(i)] = dist[size_t(i)] <= d ? 1 : 0;
  ControlSet Kd_set = ControlSet::grid_mask(g, Kd);

  const GccOptions& ropt = opts.gcc;
  int G = int(std::lround(std::sqrt(double(ropt.n_starts))));
  int total = G * G * ropt.n_dirs;
  std::vector<double> run_start(size_t(total), -1.0);
  parallel_for(0, total, [&](int64_t ray) {
    int di = int(ray % ropt.n_dirs);
    int si = int(ray / ropt.n_dirs);
    double angle = kTwoPi * di / ropt.n_dirs;
    Vec2 e{std::cos(angle), std::sin(angle)};
    Vec2 x0{(si / G + 0.5) / double(G), (si % G + 0.5) / double(G)};
    double current_run = -1.0;
    int march_steps = int(ropt.L_max / ropt.step) + 1;
    for (int i = 0; i < march_steps; ++i) {
      double y = i * ropt.step;
      bool in = Kd_set.contains(torus_wrap(x0 + y * e));
      if (in) {
        if (current_run < 0.0) current_run = y;
        if (y - current_run >= 0.5 * d) {
          run_start[size_t(ray)] = current_run;
          return;
        }
      } else {
        current_run = -1.0;
      }
    }
  });
  double D = 0.0;
  for (double rs : run_start) {
    if (rs < 0.0) {
      cert.diagnostic = "some ray never dwells d/2 inside K_d within L_max";
      return attempt;
    }
    D = std::max(D, rs);
  }
  cert.D = D;
  cert.gamma = D * cert.b_tilde + 0.5 * d * cert.b_lower;
  if (!(cert.gamma > 0.0)) {
    cert.diagnostic = "gamma = D b_tilde + (d/2) b_lower is not positive";
    return attempt;
  }
  cert.valid = true;
  attempt.ok = true;
  return attempt;
}

}  // namespace

MagneticCertificate certify_bending(const ScalarField& b, double threshold,
                                    const CertifyOptions& opts) {
  if (!(threshold > 0.0)) throw std::invalid_argument("certify_bending: threshold must be > 0");
  b.check_finite("certify_bending");
  SignAttempt plus = certify_one_sign(b, threshold, +1, opts);
  if (plus.ok) return plus.cert;
  SignAttempt minus = certify_one_sign(b, threshold, -1, opts);
  if (minus.ok) return minus.cert;
  plus.cert.diagnostic = "no valid certificate for either sign (+b: " + plus.cert.diagnostic +
                         "; -b: " + minus.cert.diagnostic + ")";
  return plus.cert;
}

namespace {

struct AngularCone {
  double angle;
  double half_width;
};

// Max first-hit length of B(center, r) over a start grid x directions outside
// the given cones. Returns < 0 if some remaining ray exceeds the cap.
double measure_flight_length(const Ball& target, const std::vector<AngularCone>& cones,
                             const DeriveOptions& opts) {
  std::vector<double> dirs;
  for (int i = 0; i < opts.L_dirs; ++i) dirs.push_back(kTwoPi * i / opts.L_dirs);
  for (const auto& c : cones) {  // cone edges are the worst surviving directions
    dirs.push_back(c.angle + c.half_width * 1.02);
    dirs.push_back(c.angle - c.half_width * 1.02);
  }
  auto is_good = [&](double a) {
    for (const auto& c : cones) {
      double d = std::remainder(a - c.angle, kTwoPi);
      if (std::abs(d) < c.half_width) return false;
    }
    return true;
  };
  std::vector<double> good;
  for (double a : dirs)
    if (is_good(a)) good.push_back(a);
  if (good.empty()) return -1.0;

  int G = int(std::lround(std::sqrt(double(opts.L_starts))));
  int total = G * G * int(good.size());
  int march_steps = int(opts.L_cap / opts.L_step) + 1;
  std::vector<double> first_hit(size_t(total), -1.0);
  parallel_for(0, total, [&](int64_t ray) {
    int di = int(ray % int(good.size()));
    int si = int(ray / int(good.size()));
    double angle = good[size_t(di)];
    Vec2 e{std::cos(angle), std::sin(angle)};
    Vec2 x0{(si / G + 0.5) / double(G), (si % G + 0.5) / double(G)};
    for (int i = 0; i < march_steps; ++i) {
      double y = i * opts.L_step;
      if (torus_dist(torus_wrap(x0 + y * e), target.center) < target.radius) {
        first_hit[size_t(ray)] = y;
        return;
      }
    }
  });
  double L = 0.0;
  for (double h : first_hit) {
    if (h < 0.0) return -1.0;
    L = std::max(L, h);
  }
  return L;
}

}  // namespace

BendingParams derive_bending_params(const MagneticCertificate& cert, const Ball& ball,
                                    double M_bar, const DeriveOptions& opts) {
  BendingParams out;
  if (!cert.valid) {
    out.binding = "certificate invalid: " + cert.diagnostic;
    return out;
  }
  if (!(ball.radius > 0.0) || ball.radius >= 0.5) {
    out.binding = "ball radius must be in (0, 1/2)";
    return out;
  }

  out.r_enum = ball.radius / 4.0;
  auto bad = enumerate_bad_directions(Ball{ball.center, out.r_enum});
  out.N_bad = int(bad.size());

  // Escape cones sit on the principal directions only. For the L
  // measurement every bad direction (principal included) gets a guard sized
  // by its miss margin: a ray delta away from a bad direction drifts across
  // the missing offsets (width spacing - 2r) in length ~ (spacing - 2r)/delta,
  // so guards of (spacing - 2r)/(0.6 L_cap) keep all surviving rays under the
  // cap. The cap doubles adaptively if the guards leave no direction.
  std::vector<double> principal;
  for (auto [a, b] : bad)
    if (a * a + b * b <= opts.u_cap * opts.u_cap)
      principal.push_back(std::atan2(double(b), double(a)));
  std::sort(principal.begin(), principal.end());
  out.N_principal = int(principal.size());

  double gap = kTwoPi;
  if (!principal.empty()) {
    gap = principal.front() + kTwoPi - principal.back();
    for (size_t i = 0; i + 1 < principal.size(); ++i)
      gap = std::min(gap, principal[i + 1] - principal[i]);
  }
  out.min_gap = gap;
  out.beta = std::min(opts.cone_fraction * gap, opts.beta_abs);

  double L = -1.0;
  DeriveOptions mopts = opts;
  for (double cap = opts.L_cap; cap <= 16.0 * opts.L_cap; cap *= 2.0) {
    std::vector<AngularCone> cones;
    for (auto [a, b] : bad) {
      double angle = std::atan2(double(b), double(a));
      double u = std::hypot(double(a), double(b));
      double spacing = 1.0 / u;
      // budget the windup length ~ u along the closed geodesic inside the cap
      double guard = std::max(spacing - 2.0 * out.r_enum, 0.0) / (0.6 * std::max(cap - u, 1.0));
      cones.push_back({angle, std::max(guard, 0.5 * out.beta)});
    }
    mopts.L_cap = cap;
    L = measure_flight_length(Ball{ball.center, out.r_enum}, cones, mopts);
    if (L >= 0.0) break;
  }
  if (L < 0.0) {
    out.binding = "free-flight length cap exceeded while measuring L";
    return out;
  }
  out.L = L;

  // Aimed rotation: past the cone width, short of the next principal cone.
  double rot_needed = principal.empty() ? 0.0 : opts.rot_margin * out.beta;
  if (!principal.empty() && !(rot_needed < gap - out.beta)) {
    out.binding = "rotation target collides with the neighboring cone";
    return out;
  }
  double b_eff = std::max(cert.b_max, 1.0);

  double c0 = 0.0, m = 0.0, tau = 0.0, Mb = 0.0;
  double K_M = 1.0;
  for (int it = 0; it < 80; ++it) {
    // Case-3 rotation-rate floor gamma / (2 (D + d/2) K_M).
    double rate_floor = cert.gamma / (2.0 * (cert.D + 0.5 * cert.d) * K_M);
    tau = principal.empty() ? 0.0 : rot_needed / rate_floor;
    if (tau > opts.tau_cap) {
      // Cap tau and shrink beta to what the capped rotation still escapes.
      tau = opts.tau_cap;
      double rot_max = tau * rate_floor;
      out.beta = std::min(out.beta, 0.5 * rot_max);
      if (out.beta < opts.beta_floor) {
        out.binding = "beta below floor: capped tau cannot rotate out of the bad cones";
        return out;
      }
    }
    double S_flight = tau > 0.0 ? tau / std::max(L, 1e-12) : 1e300;
    double S_budget = ball.radius / (4.0 * b_eff * std::max(L * L, 1e-12));
    double S_max = opts.safety * std::min(S_flight, S_budget);
    // with c0 = c0_factor * m: sqrt(1/m^2 + 1/c0^2) = hypot(1, 1/c0_factor)/m
    m = std::max(std::hypot(1.0, 1.0 / opts.c0_factor) / S_max, opts.m_floor);
    c0 = opts.c0_factor * m;
    Mb = (M_bar > 0.0) ? M_bar : opts.auto_M_bar_factor * m;
    double K_new = std::sqrt(1.0 + Mb * Mb / (c0 * c0));
    if (std::abs(K_new - K_M) < 1e-9 * K_M) {
      K_M = K_new;
      break;
    }
    K_M = K_new;
  }
  if (tau <= 0.0) tau = L * std::sqrt(2.0) / m / opts.safety;  // no bad directions

  out.m = m;
  out.c0 = c0;
  out.tau = tau;
  out.M_bar = Mb;
  out.T_m = L * std::sqrt(1.0 / (m * m) + 1.0 / (c0 * c0));
  out.T = 4.0 * (out.T_m + tau);

  if (M_bar > 0.0 && M_bar < m) {
    out.binding = "M_bar below the derived minimal speed m";
    return out;
  }
  // Direct substitution of the published inequalities.
  if (!principal.empty() && !(out.T_m < tau)) {
    out.binding = "flight-time condition T_m < tau failed";
    return out;
  }
  if (!(0.5 * L * L * b_eff * std::sqrt(1.0 / (c0 * c0) + 1.0 / (m * m)) < ball.radius / 8.0)) {
    out.binding = "deviation budget (L^2/2) sqrt(1/c0^2 + 1/m^2) < r0/8 failed";
    return out;
  }
  double K_chk = std::sqrt(1.0 + Mb * Mb / (c0 * c0));
  if (!principal.empty() &&
      !(out.beta < tau * cert.gamma / (2.0 * K_chk * (cert.D + 0.5 * cert.d)))) {
    out.binding = "rotation-escape inequality on beta failed";
    return out;
  }
  out.feasible = true;
  return out;
}

BendingCensus verify_bending_lemma(const BendingParams& params, const Ball& ball,
                                   const std::function<double(Vec2)>& b_field,
                                   const std::function<Vec2(double, Vec2, Vec2)>& F_extra,
                                   double F_sup, double c, const CensusOptions& opts) {
  if (!params.feasible) throw std::invalid_argument("verify_bending_lemma: params infeasible");
  if (c < params.c0) throw std::invalid_argument("verify_bending_lemma: c below the derived c0");

  double dt_space = opts.dt_space > 0.0 ? opts.dt_space : ball.radius / 16.0;
  double T = params.T;
  double target_r = 0.5 * ball.radius;
  double t_lo = 0.25 * T, t_hi = 0.75 * T;

  // Constant-field fast path when the sampled field is uniform at 32 probes.
  bool b_const = true;
  double b0 = b_field({0.313, 0.771});
  for (int i = 1; i < 32 && b_const; ++i) {
    Vec2 p{std::fmod(0.318 * i + 0.09, 1.0), std::fmod(0.751 * i + 0.41, 1.0)};
    if (std::abs(b_field(p) - b0) > 1e-14 * (1.0 + std::abs(b0))) b_const = false;
  }

  int total = opts.nx * opts.ny * opts.n_dirs * opts.n_speeds;
  BendingCensus census;
  census.total = total;
  census.samples.assign(size_t(total), CensusSample{});

  parallel_for(0, total, [&](int64_t s) {
    int rem = int(s);
    int iv = rem % opts.n_speeds;
    rem /= opts.n_speeds;
    int id = rem % opts.n_dirs;
    rem /= opts.n_dirs;
    int iy = rem % opts.ny;
    int ix = rem / opts.ny;

    double speed =
        opts.n_speeds == 1
            ? params.m
            : params.m * std::pow(params.M_bar / params.m, double(iv) / (opts.n_speeds - 1));
    double angle = kTwoPi * (id + 0.5) / opts.n_dirs;
    Vec2 x0{(ix + 0.5) / double(opts.nx), (iy + 0.5) / double(opts.ny)};
    Vec2 v0{speed * std::cos(angle), speed * std::sin(angle)};

    ForceSpec f;
    f.c = LightSpeed::of(c);
    if (b_const) {
      f.b_is_const = true;
      f.b_const = b0;
    } else {
      f.b = [&b_field](double, Vec2 x) { return b_field(x); };
    }
    if (F_extra) {
      f.F_extra = F_extra;
      f.F_extra_sup = F_sup;
    }

    double vhat = norm(relativistic_velocity(v0, f.c));
    double dt = dt_space / std::max(vhat, 1e-12);
    dt = std::min(dt, T / 128.0);

    CensusSample& out = census.samples[size_t(s)];
    out.x = x0;
    out.v = v0;
    double vmin = speed, vmax = speed;
    integrate_observe(PhaseState{x0, v0}, f, 0.0, T, dt, [&](double t, const PhaseState& p) {
      double sp = norm(p.v);
      vmin = std::min(vmin, sp);
      vmax = std::max(vmax, sp);
      if (!out.hit && t > t_lo && t < t_hi && torus_dist(p.x, ball.center) < target_r) {
        out.hit = true;
        out.first_hit_in_window = t;
      }
    });
    out.band_ok = (vmin >= 0.5 * speed) && (vmax <= 2.0 * speed);
  });

  for (const auto& s : census.samples) {
    if (s.hit) ++census.hits;
    if (s.band_ok) ++census.band_ok;
  }
  census.hit_fraction = double(census.hits) / total;
  census.band_fraction = double(census.band_ok) / total;
  if (!opts.record_samples) census.samples.clear();
  return census;
}

}  // namespace vmt
