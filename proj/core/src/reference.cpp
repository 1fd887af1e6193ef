#include "vmtorus/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "vmtorus/parallel.hpp"

namespace vmt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// C-infinity step: 0 for t <= 0, 1 for t >= 1, flat to all orders at both ends.
double cinf_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double cinf_step_d(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  double h = 1e-6;
  double lo = std::max(t - h, 0.0), hi = std::min(t + h, 1.0);
  return (cinf_step(hi) - cinf_step(lo)) / (hi - lo);
}

// C-infinity bump on (0,1) normalized to unit integral.
double cinf_bump01(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp(-1.0 / (t * (1.0 - t)));
}

// Extended gcd: returns (x, y) with x p + y q = gcd(p, q).
std::pair<long, long> ext_gcd(long p, long q) {
  if (q == 0) return {1, 0};
  auto [x, y] = ext_gcd(q, p % q);
  return {y, x - (p / q) * y};
}

struct BandCoords {
  double s;     // arc coordinate of the cut-band representative
  double zeta;  // in [0, spacing)
};

}  // namespace

// ---------------------------------------------------------------------------
// AccelField
// ---------------------------------------------------------------------------

struct AccelFieldImpl {
  // cached band geometry
  Vec2 uhat, nhat;
  double offset, sp, sigma0, d, kappa;

  BandCoords band(Vec2 x) const {
    double zr = dot(x, nhat) - offset;
    double J = std::floor(zr / sp);
    double zeta = zr - J * sp;
    if (zeta >= sp) {  // guard rounding
      zeta -= sp;
      J += 1.0;
    }
    return {dot(x, uhat) - J * sigma0, zeta};
  }
};

namespace {
AccelFieldImpl make_impl(const StripSpec& core, int harmonic) {
  core.validate();
  AccelFieldImpl impl;
  impl.uhat = core.dir();
  impl.nhat = core.unit_normal();
  impl.offset = core.offset;
  impl.sp = core.spacing();
  impl.d = core.half_width;
  double un = core.u_norm();
  impl.kappa = kTwoPi * harmonic / un;
  auto [x, y] = ext_gcd(core.p, core.q);  // x p + y q = 1
  long a = -y, b = x;                     // b p - a q = 1
  impl.sigma0 = (double(a) * core.p + double(b) * core.q) / un;
  return impl;
}
}  // namespace

AccelField::AccelField(const StripSpec& core, int harmonic)
    : core_(core), harmonic_(harmonic) {
  if (harmonic < 1) throw std::invalid_argument("AccelField: harmonic must be >= 1");
  if (!(core.half_width > 0.0) || !(core.half_width < 0.25 * core.spacing()))
    throw std::invalid_argument("AccelField: core half-width must be in (0, spacing/4)");
  kappa_ = kTwoPi * harmonic / core.u_norm();
}

namespace {
// The log-magnitude profile: ell = -kappa zeta on [0, sp - d], and lifts back
// by kappa*sp across [sp - d, sp] so exp(ell) is smooth and positive on the
// periodic band.
double ell_raw(double zeta, double kappa, double sp, double d) {
  if (zeta <= sp - d) return -kappa * zeta;
  return -kappa * zeta + kappa * sp * cinf_step((zeta - (sp - d)) / d);
}

double ell_raw_d(double zeta, double kappa, double sp, double d) {
  if (zeta <= sp - d) return -kappa;
  return -kappa + kappa * sp * cinf_step_d((zeta - (sp - d)) / d) / d;
}

// Phase patch: 0 on [d, sp - d], +1/2 * S(1 - zeta/d) on [0, d],
// -1/2 * S((zeta - sp + d)/d) on [sp - d, sp]; P(0+) = P(sp-) + 1 restores
// phase continuity across the cut (the Bezout shift sigma0 of s).
double phase_patch(double zeta, double sp, double d) {
  if (zeta < d) return 0.5 * cinf_step(1.0 - zeta / d);
  if (zeta > sp - d) return -0.5 * cinf_step((zeta - (sp - d)) / d);
  return 0.0;
}

double phase_patch_d(double zeta, double sp, double d) {
  if (zeta < d) return -0.5 * cinf_step_d(1.0 - zeta / d) / d;
  if (zeta > sp - d) return -0.5 * cinf_step_d((zeta - (sp - d)) / d) / d;
  return 0.0;
}
}  // namespace

double AccelField::ell(double zeta) const {
  return ell_raw(zeta, kappa_, core_.spacing(), core_.half_width);
}
double AccelField::ell_d(double zeta) const {
  return ell_raw_d(zeta, kappa_, core_.spacing(), core_.half_width);
}
double AccelField::ell_dd(double zeta) const {
  double h = 1e-6 * core_.spacing();
  return (ell_d(zeta + h) - ell_d(zeta - h)) / (2.0 * h);
}
double AccelField::g(double zeta) const { return std::exp(ell(zeta)); }

Vec2 AccelField::W(Vec2 x) const {
  auto impl = make_impl(core_, harmonic_);
  auto bc = impl.band(x);
  double theta = kappa_ * bc.s + kappa_ * impl.sigma0 * phase_patch(bc.zeta, impl.sp, impl.d);
  double mag = g(bc.zeta);
  return mag * (std::cos(theta) * impl.uhat - std::sin(theta) * impl.nhat);
}

double AccelField::Phi(Vec2 x) const {
  auto impl = make_impl(core_, harmonic_);
  auto bc = impl.band(x);
  double theta = kappa_ * bc.s + kappa_ * impl.sigma0 * phase_patch(bc.zeta, impl.sp, impl.d);
  return g(bc.zeta) * std::sin(theta) / kappa_;
}

Vec2 AccelField::grad_Phi(Vec2 x) const {
  auto impl = make_impl(core_, harmonic_);
  auto bc = impl.band(x);
  double P = phase_patch(bc.zeta, impl.sp, impl.d);
  double Pd = phase_patch_d(bc.zeta, impl.sp, impl.d);
  double theta = kappa_ * bc.s + kappa_ * impl.sigma0 * P;
  double gg = g(bc.zeta);
  double ds = gg * std::cos(theta);  // d/ds of Phi
  double dz = (ell_d(bc.zeta) * gg * std::sin(theta) +
               gg * std::cos(theta) * kappa_ * impl.sigma0 * Pd) /
              kappa_;
  return ds * impl.uhat + dz * impl.nhat;
}

double AccelField::lap_Phi(Vec2 x) const {
  auto impl = make_impl(core_, harmonic_);
  auto bc = impl.band(x);
  double P = phase_patch(bc.zeta, impl.sp, impl.d);
  double Pd = phase_patch_d(bc.zeta, impl.sp, impl.d);
  // second derivative of the patch by differences of the closed-form first
  double h = 1e-6 * impl.sp;
  double Pdd = (phase_patch_d(bc.zeta + h, impl.sp, impl.d) -
                phase_patch_d(bc.zeta - h, impl.sp, impl.d)) /
               (2.0 * h);
  double theta = kappa_ * bc.s + kappa_ * impl.sigma0 * P;
  double gg = g(bc.zeta);
  double gd = ell_d(bc.zeta) * gg;
  double gdd = (ell_dd(bc.zeta) + ell_d(bc.zeta) * ell_d(bc.zeta)) * gg;
  double tz = kappa_ * impl.sigma0 * Pd;   // d theta / d zeta
  double tzz = kappa_ * impl.sigma0 * Pdd;
  double sin_t = std::sin(theta), cos_t = std::cos(theta);
  // Phi = g(z) sin(theta)/kappa, theta = kappa s + patch(z)
  double d_ss = -kappa_ * gg * sin_t;
  double d_zz = (gdd * sin_t + 2.0 * gd * cos_t * tz - gg * sin_t * tz * tz + gg * cos_t * tzz) /
                kappa_;
  return d_ss + d_zz;
}

double AccelField::Psi(Vec2 x) const {
  auto impl = make_impl(core_, harmonic_);
  auto bc = impl.band(x);
  double theta = kappa_ * bc.s + kappa_ * impl.sigma0 * phase_patch(bc.zeta, impl.sp, impl.d);
  return -g(bc.zeta) * std::cos(theta) / kappa_;
}

double AccelField::min_W() const {
  double mn = 1e300;
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 128; ++j) {
      Vec2 x{(i + 0.5) / 128.0, (j + 0.5) / 128.0};
      mn = std::min(mn, norm(W(x)));
    }
  return mn;
}

AccelField build_accel_field(const StripSpec& core, int harmonic) {
  return AccelField(core, harmonic);
}

AccelFieldChecks check_accel_field(const std::function<Vec2(Vec2)>& W, const StripSpec& core,
                                   double zeta_D, int n_probe) {
  AccelFieldChecks out;
  out.min_W_outside = 1e300;
  double h = 1e-6;
  for (int i = 0; i < n_probe; ++i)
    for (int j = 0; j < n_probe; ++j) {
      Vec2 x{(i + 0.5) / n_probe, (j + 0.5) / n_probe};
      double zeta = core.band_coord(x);
      double dist_core = std::min(zeta, core.spacing() - zeta);
      if (dist_core <= core.half_width * 1.05) continue;  // inside/near H_d
      Vec2 wx1 = W({x.x + h, x.y}), wx0 = W({x.x - h, x.y});
      Vec2 wy1 = W({x.x, x.y + h}), wy0 = W({x.x, x.y - h});
      double div = (wx1.x - wx0.x + wy1.y - wy0.y) / (2.0 * h);
      double curl = (wx1.y - wx0.y - (wy1.x - wy0.x)) / (2.0 * h);
      out.div_residual = std::max(out.div_residual, std::abs(div));
      out.curl_residual = std::max(out.curl_residual, std::abs(curl));
      out.min_W_outside = std::min(out.min_W_outside, norm(W(x)));
    }
  // line integrals along D (the parallel geodesic at band offset zeta_D)
  Vec2 uh = core.dir(), nh = core.unit_normal();
  double len = core.u_norm();
  Vec2 anchor = (core.offset + zeta_D) * nh;
  int nq = 4096;
  double circ = 0.0, flux = 0.0;
  for (int i = 0; i < nq; ++i) {
    Vec2 x = torus_wrap(anchor + (len * (i + 0.5) / nq) * uh);
    Vec2 w = W(x);
    circ += dot(w, uh);
    flux += dot(w, nh);
  }
  out.circulation = circ * len / nq;
  out.flux = flux * len / nq;
  return out;
}

// ---------------------------------------------------------------------------
// charge correction
// ---------------------------------------------------------------------------

ChargeCorrection charge_correction(const ScalarField& h, const StripSpec& omega, double d_core,
                                   const ChargeCorrectionOptions& opts) {
  omega.validate();
  const GridSpec g = h.grid;
  double sp = omega.spacing();
  double d_inner = opts.d_inner > 0.0 ? opts.d_inner : 0.5 * (d_core + omega.half_width);
  if (!(d_core < d_inner && d_inner < omega.half_width))
    throw std::invalid_argument("charge_correction: need d_core < d_inner < omega half-width");
  double zeta_D = opts.zeta_D > 0.0 ? opts.zeta_D : 0.5 * sp;

  SpectralScalar h_hat = to_spectral(h);
  if (std::abs(mean(h_hat)) > 1e-10)
    throw std::invalid_argument("charge_correction: h must have zero mean");
  SpectralScalar theta_hat = solve_poisson_scalar(h_hat);
  SpectralVector grad_theta_hat = gradient(theta_hat);

  Vec2 uh = omega.dir(), nh = omega.unit_normal();
  double len = omega.u_norm();

  // Hodge period across D
  double alpha = 0.0;
  {
    Vec2 anchor = (omega.offset + zeta_D) * nh;
    int nq = 4096;
    for (int i = 0; i < nq; ++i) {
      Vec2 x = torus_wrap(anchor + (len * (i + 0.5) / nq) * uh);
      alpha += dot(eval(grad_theta_hat, x), nh);
    }
    alpha *= len / nq;
  }
  ChargeCorrection out;
  out.alpha = alpha;
  if (std::abs(alpha) > opts.alpha_tol)
    throw std::invalid_argument("charge_correction: Hodge period across D is nonzero: alpha = " +
                                std::to_string(alpha));

  // Stream function of grad theta on the band, by path integration from D:
  //   Psi(x) = Psi_D(s) + int_{zeta_D}^{zeta} (d theta/ds) dzeta',
  //   Psi_D(s) = -int_0^s (d theta/dzeta)(s', zeta_D) ds'.
  // Tabulate Psi_D once; the zeta-leg is integrated per query point.
  int nD = 2048;
  std::vector<double> PsiD(size_t(nD) + 1, 0.0);
  {
    Vec2 anchor = (omega.offset + zeta_D) * nh;
    double hstep = len / nD;
    double acc = 0.0;
    for (int i = 0; i < nD; ++i) {
      // Gauss-2 per panel
      for (double gp : {0.5 - 0.28867513459481287, 0.5 + 0.28867513459481287}) {
        Vec2 x = torus_wrap(anchor + ((i + gp) * hstep) * uh);
        acc += -dot(eval(grad_theta_hat, x), nh) * 0.5 * hstep;
      }
      PsiD[size_t(i) + 1] = acc;
    }
  }
  auto psi_on_band = [&](Vec2 x) {
    // band coordinates relative to the omega strip
    double zr = dot(x, nh) - omega.offset;
    double J = std::floor(zr / sp);
    double zeta = zr - J * sp;
    double s = dot(x, uh);  // arc parameter of the foot point on D (mod len)
    double sm = s - len * std::floor(s / len);
    double fi = sm / len * nD;
    int i0 = std::min(int(fi), nD - 1);
    double frac = fi - i0;
    double base = PsiD[size_t(i0)] * (1.0 - frac) + PsiD[size_t(i0) + 1] * frac;
    // integrate d theta/ds along nhat from zeta_D to zeta
    double lo = zeta_D, hi = zeta;
    double sign = 1.0;
    if (hi < lo) {
      std::swap(lo, hi);
      sign = -1.0;
    }
    int panels = std::max(8, int(opts.quad_panels * (hi - lo) / sp));
    double acc = 0.0;
    static const double gauss5_x[5] = {-0.906179845938664, -0.538469310105683, 0.0,
                                       0.538469310105683, 0.906179845938664};
    static const double gauss5_w[5] = {0.236926885056189, 0.478628670499366, 0.568888888888889,
                                       0.478628670499366, 0.236926885056189};
    double hp = (hi - lo) / panels;
    for (int pnl = 0; pnl < panels; ++pnl) {
      double mid = lo + (pnl + 0.5) * hp;
      for (int q = 0; q < 5; ++q) {
        double z = mid + 0.5 * hp * gauss5_x[q];
        Vec2 xq = torus_wrap(x + (z - zeta) * nh);
        acc += 0.5 * hp * gauss5_w[q] * dot(eval(grad_theta_hat, xq), uh);
      }
    }
    return base + sign * acc;
  };

  // eta(zeta): 0 on the inner strip, 1 outside omega, C-infinity ramp between.
  auto eta_pair = [&](Vec2 x) {
    double zeta = omega.band_coord(x);
    double dist = std::min(zeta, sp - zeta);  // distance to the central line
    double t = (dist - d_inner) / (omega.half_width - d_inner);
    double e = cinf_step(t);
    double ed = cinf_step_d(t) / (omega.half_width - d_inner);
    if (zeta > 0.5 * sp) ed = -ed;  // d(dist)/dzeta flips sign
    return std::pair<double, double>{e, ed};
  };

  auto u_fn = [=](Vec2 x) -> Vec2 {
    auto [e, ed] = eta_pair(x);
    Vec2 gt = eval(grad_theta_hat, x);
    Vec2 result = (1.0 - e) * gt;
    if (ed != 0.0) {
      double psi = psi_on_band(x);
      // grad_perp(eta) = (d2 eta, -d1 eta) with grad eta = ed * nhat
      Vec2 gperp_eta{ed * nh.y, -ed * nh.x};
      result -= psi * gperp_eta;
    }
    return result;
  };
  out.u = u_fn;

  // diagnostics on the grid of h
  VectorField us(g);
  for (int a = 0; a < g.n; ++a)
    for (int b = 0; b < g.n; ++b) us.set(a, b, u_fn(Vec2{double(a) / g.n, double(b) / g.n}));
  out.u_samples = us;
  SpectralVector u_hat = to_spectral(us);
  SpectralScalar div_u = divergence(u_hat);
  double res = 0.0;
  {
    auto divr = to_real(div_u);
    for (size_t i = 0; i < divr.values.size(); ++i)
      res = std::max(res, std::abs(divr.values[i] - h.values[i]));
  }
  out.div_residual = res;
  double leak = 0.0;
  int probe = 4 * g.n;
  for (int a = 0; a < probe; ++a)
    for (int b = 0; b < probe; ++b) {
      Vec2 x{(a + 0.31) / probe, (b + 0.77) / probe};
      if (std::abs(omega.signed_dist(x)) >= omega.half_width) {
        Vec2 u = u_fn(x);
        leak = std::max(leak, std::max(std::abs(u.x), std::abs(u.y)));
      }
    }
  out.support_leak = leak;
  Vec2 mu = grid_mean(us);
  out.mean_norm = norm(mu);
  return out;
}

// ---------------------------------------------------------------------------
// plans
// ---------------------------------------------------------------------------

const char* segment_mode_name(SegmentMode m) {
  switch (m) {
    case SegmentMode::Idle: return "idle";
    case SegmentMode::MaxwellSteerUp: return "maxwell-steer-up";
    case SegmentMode::HoldConstantE: return "hold-constant-E";
    case SegmentMode::MaxwellSteerDown: return "maxwell-steer-down";
    case SegmentMode::PoissonAccelerate: return "poisson-accelerate";
    case SegmentMode::BendWait: return "bend-wait";
  }
  return "?";
}

Vec2 GccPlan::reference_current(double t, Vec2 x) const {
  if (segments.size() < 4) return {0.0, 0.0};
  const PlanSegment& up = segments[1];
  const PlanSegment& down = segments[3];
  auto eval_current = [&](const SteeringResult& sr, double local_t) -> Vec2 {
    const SourceMoments& src = sr.current;
    int i = std::clamp(int(std::lround(local_t / src.dt())), 0, src.samples() - 1);
    return eval(src.j_hat(i), x);
  };
  if (t >= up.t0 && t <= up.t1) return eval_current(steer_up, t - up.t0);
  if (t >= down.t0 && t <= down.t1) return eval_current(steer_down, t - down.t0);
  return {0.0, 0.0};
}

GccPlan assemble_reference_gcc(const ControlSet& omega, const GccPlanConfig& cfg) {
  auto gccedge = check_gcc(omega);
  if (!gccedge.holds)
    throw std::invalid_argument("assemble_reference_gcc: omega fails the geometric condition");

  GridSpec g = cfg.grid;
  GccPlan plan{.bumps = make_bumps(cfg.quad_n, LightSpeed::of(cfg.c)),
               .sources_ = SourceMoments::zero(g, 0.0, 1.0, 1)};
  double T = cfg.T1 + 2.0 * cfg.T2 + cfg.T3;
  plan.T = T;
  plan.segments = {
      {SegmentMode::Idle, 0.0, cfg.T1},
      {SegmentMode::MaxwellSteerUp, cfg.T1, cfg.T1 + cfg.T2},
      {SegmentMode::HoldConstantE, cfg.T1 + cfg.T2, cfg.T1 + cfg.T2 + cfg.T3},
      {SegmentMode::MaxwellSteerDown, cfg.T1 + cfg.T2 + cfg.T3, T},
  };

  VectorField E1 = VectorField::sample(g, [](Vec2) { return Vec2{1.0, 0.0}; });

  SteeringProblem up;
  up.grid = g;
  up.c = cfg.c;
  up.T = cfg.T2;
  up.k_ctrl = 2;
  up.src_dt = cfg.src_dt;
  up.E0 = VectorField(g);
  up.B0 = ScalarField(g);
  up.E1 = E1;
  up.B1 = ScalarField(g);
  plan.steer_up = solve_steering(up, cfg.basis, omega);

  SteeringProblem down = up;
  down.E0 = to_real(plan.steer_up.trajectory.E_hat.back());
  down.B0 = to_real(plan.steer_up.trajectory.B_hat.back());
  down.E1 = VectorField(g);
  down.B1 = ScalarField(g);
  plan.steer_down = solve_steering(down, cfg.basis, omega);

  // whole-plan field movie at the steering cadence
  {
    std::vector<VectorField> E_frames;
    std::vector<ScalarField> B_frames;
    int idle_frames = std::max(1, int(cfg.T1 / cfg.src_dt + 0.5));
    for (int i = 0; i < idle_frames; ++i) {
      E_frames.push_back(VectorField(g));
      B_frames.push_back(ScalarField(g));
    }
    auto push_traj = [&](const MaxwellTrajectory& tr, bool skip_first) {
      for (int i = skip_first ? 1 : 0; i < tr.samples(); ++i) {
        E_frames.push_back(to_real(tr.E_hat[size_t(i)]));
        B_frames.push_back(to_real(tr.B_hat[size_t(i)]));
      }
    };
    push_traj(plan.steer_up.trajectory, false);
    int hold_frames = int(cfg.T3 / cfg.src_dt + 0.5) - 1;
    EMState hold_state{0.0, down.E0, down.B0, cfg.c};
    for (int i = 0; i < hold_frames; ++i) {
      E_frames.push_back(hold_state.E);
      B_frames.push_back(hold_state.B);
    }
    push_traj(plan.steer_down.trajectory, false);
    plan.fields = FieldMovie(0.0, cfg.src_dt, E_frames, B_frames);
  }

  plan.endpoint_field_max =
      std::max(max_abs(to_real(plan.steer_down.trajectory.E_hat.back())),
               max_abs(to_real(plan.steer_down.trajectory.B_hat.back())));
  plan.f_support_leak =
      std::max(plan.steer_up.support_leak, plan.steer_down.support_leak);

  // (3.1): fast free transport reaches the eroded omega within T1
  {
    int hits = 0, total = 0;
    int nx = 10, nd = 16;
    for (int ix = 0; ix < nx; ++ix)
      for (int iy = 0; iy < nx; ++iy)
        for (int id = 0; id < nd; ++id) {
          double ang = kTwoPi * (id + 0.5) / nd;
          Vec2 x0{(ix + 0.5) / double(nx), (iy + 0.5) / double(nx)};
          double vhat = cfg.m_fast / std::sqrt(1.0 + cfg.m_fast * cfg.m_fast / (cfg.c * cfg.c));
          Vec2 e{std::cos(ang), std::sin(ang)};
          bool hit = false;
          int steps = int(cfg.T1 * vhat / 0.002);
          for (int i = 0; i <= steps && !hit; ++i)
            hit = omega.contains_eroded(torus_wrap(x0 + (0.002 * i) * e), cfg.erosion);
          ++total;
          if (hit) ++hits;
        }
    plan.idle_hit_fraction = double(hits) / total;
  }

  // (3.2): a standing particle under E = (1,0) crosses |V| >= 4 and enters
  // the eroded omega; record the crossing time (empirical T3 witness).
  {
    ForceSpec f;
    f.c = LightSpeed::of(cfg.c);
    f.E = [](double, Vec2) { return Vec2{1.0, 0.0}; };
    double t_cross = -1.0;
    PhaseState s{{0.51, 0.27}, {0.0, 0.0}};
    double t = 0.0, dt = 1e-3;
    for (int i = 0; i < int(4.0 * cfg.T3 / dt); ++i) {
      s = rk4_step(s, f, t, dt);
      t += dt;
      if (norm(s.v) >= 4.0 && omega.contains_eroded(s.x, cfg.erosion)) {
        t_cross = t;
        break;
      }
    }
    plan.t_accel_cross = t_cross;
  }

  // Cond 3.3 analogue: sample census under the plan fields.
  {
    ForceSpec f = plan.fields.force(LightSpeed::of(cfg.c), 1.0 / cfg.c);
    int total = cfg.census_nx * cfg.census_ny * cfg.census_dirs * cfg.census_speeds;
    std::vector<uint8_t> hit(size_t(total), 0);
    double t_lo = T / 9.0, t_hi = 8.0 * T / 9.0;
    parallel_for(0, total, [&](int64_t idx) {
      int rem = int(idx);
      int iv = rem % cfg.census_speeds;
      rem /= cfg.census_speeds;
      int id = rem % cfg.census_dirs;
      rem /= cfg.census_dirs;
      int iy = rem % cfg.census_ny;
      int ix = rem / cfg.census_ny;
      double speed = cfg.census_vmax * (iv + 0.5) / cfg.census_speeds;
      double ang = kTwoPi * (id + 0.5) / cfg.census_dirs;
      PhaseState s{{(ix + 0.5) / double(cfg.census_nx), (iy + 0.5) / double(cfg.census_ny)},
                   {speed * std::cos(ang), speed * std::sin(ang)}};
      bool ok = false;
      integrate_observe(s, f, 0.0, T, cfg.census_dt, [&](double t, const PhaseState& p) {
        if (!ok && t > t_lo && t < t_hi && norm(p.v) >= 4.0 &&
            omega.contains_eroded(p.x, cfg.erosion))
          ok = true;
      });
      hit[size_t(idx)] = ok ? 1 : 0;
    });
    int hits = 0;
    for (uint8_t v : hit) hits += v;
    plan.census_hit_fraction = double(hits) / total;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// strip plan
// ---------------------------------------------------------------------------

double StripPlan::a(double t) const {
  double dur = T2 - T1;
  if (t <= T1 || t >= T2) return 0.0;
  static const double norm_c = [] {
    // integral of exp(-1/(t(1-t))) over (0,1)
    double acc = 0.0;
    int n = 20000;
    for (int i = 0; i < n; ++i) acc += cinf_bump01((i + 0.5) / n) / n;
    return acc;
  }();
  return cinf_bump01((t - T1) / dur) / (norm_c * dur);
}

double StripPlan::a_dot(double t) const {
  double h = 1e-7;
  return (a(t + h) - a(t - h)) / (2.0 * h);
}

double StripPlan::phi_bar(double t, Vec2 x) const { return cfg.accel_amp * a(t) * accel.Phi(x); }
Vec2 StripPlan::grad_phi_bar(double t, Vec2 x) const {
  double fa = cfg.accel_amp * a(t);
  if (fa == 0.0) return {0.0, 0.0};
  return fa * accel.grad_Phi(x);
}
double StripPlan::rho_bar(double t, Vec2 x) const {
  double fa = cfg.accel_amp * a(t);
  if (fa == 0.0) return 0.0;
  return fa * accel.lap_Phi(x);
}
Vec2 StripPlan::j_bar(double t, Vec2 x) const {
  double fd = cfg.accel_amp * a_dot(t);
  if (fd == 0.0) return {0.0, 0.0};
  return fd * correction.u(x);
}
double StripPlan::f_bar(double t, Vec2 x, Vec2 v) const {
  Vec2 j = j_bar(t, x);
  return bumps.Z(v) * rho_bar(t, x) + bumps.Z1(v) * j.x + bumps.Z2(v) * j.y;
}

namespace {

// Band-limited projection: sample on a fine grid and truncate to g's modes.
SpectralScalar project_scalar(const std::function<double(Vec2)>& f, GridSpec g, int oversample) {
  GridSpec fine{g.n * oversample, g.n * oversample / 2 - 1};
  auto fld = ScalarField::sample(fine, f);
  SpectralScalar big = to_spectral(fld);
  SpectralScalar out(g);
  for (int k1 = -g.k_max; k1 <= g.k_max; ++k1)
    for (int k2 = -g.k_max; k2 <= g.k_max; ++k2) out.at(k1, k2) = big.at(k1, k2);
  return out;
}

SpectralVector project_vector(const std::function<Vec2(Vec2)>& f, GridSpec g, int oversample) {
  GridSpec fine{g.n * oversample, g.n * oversample / 2 - 1};
  auto fld = VectorField::sample(fine, f);
  SpectralVector big = to_spectral(fld);
  SpectralVector out(g);
  for (int k1 = -g.k_max; k1 <= g.k_max; ++k1)
    for (int k2 = -g.k_max; k2 <= g.k_max; ++k2) {
      int io = out.idx(k1, k2), ib = big.idx(k1, k2);
      out.c1[size_t(io)] = big.c1[size_t(ib)];
      out.c2[size_t(io)] = big.c2[size_t(ib)];
    }
  return out;
}

}  // namespace

StripPlan assemble_reference_strip(const StripPlanConfig& cfg) {
  cfg.omega.validate();
  if (!(cfg.d_core < cfg.d_inner && cfg.d_inner < cfg.omega.half_width))
    throw std::invalid_argument("assemble_reference_strip: need d_core < d_inner < half_width");
  // B(x0, 2 r0) must sit inside the strip
  if (std::abs(cfg.omega.signed_dist(cfg.ball.center)) + 2.0 * cfg.ball.radius >
      cfg.omega.half_width)
    throw std::invalid_argument("assemble_reference_strip: B(x0, 2 r0) leaks outside omega");

  StripSpec core = cfg.omega;
  core.half_width = cfg.d_core;

  StripPlan plan{.accel = AccelField(core, cfg.harmonic),
                 .cfg = cfg,
                 .bumps = make_bumps(cfg.quad_n, LightSpeed::of(cfg.c)),
                 .sources_ = SourceMoments::zero(cfg.grid, 0.0, 1.0, 1)};
  plan.T1 = cfg.T_bend1;
  plan.T2 = cfg.T_bend1 + cfg.T_acc;
  plan.T = cfg.T_bend1 + cfg.T_acc + cfg.T_bend2;
  plan.segments = {
      {SegmentMode::BendWait, 0.0, plan.T1},
      {SegmentMode::PoissonAccelerate, plan.T1, plan.T2},
      {SegmentMode::BendWait, plan.T2, plan.T},
  };

  // charge correction for the unit slice h0 = -Lap(Phi)
  GridSpec g = cfg.grid;
  auto h0 = ScalarField::sample(g, [&](Vec2 x) { return -plan.accel.lap_Phi(x); });
  ChargeCorrectionOptions copts;
  copts.d_inner = cfg.d_inner;
  plan.correction = charge_correction(h0, cfg.omega, cfg.d_core, copts);

  // Band-limited source pair: j from the projected correction, rho slaved to
  // -div j so that local charge conservation is exact at the truncation.
  SpectralVector u0_hat = project_vector(plan.correction.u, g, cfg.oversample);
  {
    int i0 = u0_hat.idx(0, 0);
    u0_hat.c1[size_t(i0)] = 0.0;  // exact zero-mean current
    u0_hat.c2[size_t(i0)] = 0.0;
  }
  SpectralScalar rho0_hat = divergence(u0_hat);
  for (auto& c : rho0_hat.coeffs) c = -c;

  // sampled sources over the full plan at the source cadence
  {
    int samples = int(std::llround(plan.T / cfg.src_dt)) + 1;
    std::vector<ScalarField> rhos;
    std::vector<VectorField> js;
    rhos.reserve(size_t(samples));
    js.reserve(size_t(samples));
    auto rho_field = to_real(rho0_hat);
    auto u_field = to_real(u0_hat);
    for (int i = 0; i < samples; ++i) {
      double t = i * cfg.src_dt;
      double fa = cfg.accel_amp * plan.a(t);
      double fd = cfg.accel_amp * plan.a_dot(t);
      ScalarField r(g);
      VectorField j(g);
      for (size_t q = 0; q < r.values.size(); ++q) {
        r.values[q] = fa * rho_field.values[q];
        j.c1[q] = fd * u_field.c1[q];
        j.c2[q] = fd * u_field.c2[q];
      }
      rhos.push_back(std::move(r));
      js.push_back(std::move(j));
    }
    plan.sources_ = SourceMoments(0.0, cfg.src_dt, std::move(rhos), std::move(js));
  }

  plan.lcc_residual = check_charge_conservation(plan.sources_);
  plan.zm_residual = check_zero_mean_current(plan.sources_);

  // analytic support check of the f-bar content
  {
    double leak = 0.0;
    for (int a = 0; a < 256; ++a)
      for (int b = 0; b < 256; ++b) {
        Vec2 x{(a + 0.29) / 256.0, (b + 0.63) / 256.0};
        if (std::abs(cfg.omega.signed_dist(x)) >= cfg.omega.half_width) {
          Vec2 u = plan.correction.u(x);
          leak = std::max(leak, std::abs(plan.accel.lap_Phi(x)));
          leak = std::max(leak, std::max(std::abs(u.x), std::abs(u.y)));
        }
      }
    plan.support_leak = leak;
  }
  plan.endpoint_max =
      std::max(std::max(std::abs(plan.a(0.0)), std::abs(plan.a(plan.T))),
               std::max(std::abs(plan.a_dot(0.0)), std::abs(plan.a_dot(plan.T)))) *
      cfg.accel_amp;

  // Cond 4.3 census under grad(phi_bar) + v_hat^perp b0
  {
    int total = cfg.census_nx * cfg.census_ny * cfg.census_dirs * cfg.census_speeds;
    std::vector<uint8_t> hit(size_t(total), 0);
    double t_lo = plan.T / 9.0, t_hi = 8.0 * plan.T / 9.0;
    double dt_space = cfg.census_dt_space > 0.0 ? cfg.census_dt_space : cfg.ball.radius / 12.0;
    const StripPlan& pl = plan;
    parallel_for(0, total, [&](int64_t idx) {
      int rem = int(idx);
      int iv = rem % cfg.census_speeds;
      rem /= cfg.census_speeds;
      int id = rem % cfg.census_dirs;
      rem /= cfg.census_dirs;
      int iy = rem % cfg.census_ny;
      int ix = rem / cfg.census_ny;
      double speed = cfg.R * (iv + 0.5) / cfg.census_speeds;
      double ang = kTwoPi * (id + 0.5) / cfg.census_dirs;
      ForceSpec f;
      f.c = LightSpeed::of(cfg.c);
      f.b_is_const = true;
      f.b_const = cfg.b0;
      f.E = [&pl](double t, Vec2 x) { return pl.grad_phi_bar(t, x); };
      PhaseState s{{(ix + 0.5) / double(cfg.census_nx), (iy + 0.5) / double(cfg.census_ny)},
                   {speed * std::cos(ang), speed * std::sin(ang)}};
      // post-kick speeds reach ~accel_amp: time step from the spatial one
      double vmax_est = cfg.accel_amp + cfg.R + 1.0;
      double dt = dt_space / vmax_est;
      bool ok = false;
      integrate_observe(s, f, 0.0, pl.T, dt, [&](double t, const PhaseState& p) {
        if (!ok && t > t_lo && t < t_hi && norm(p.v) >= cfg.hit_speed_min &&
            torus_dist(p.x, cfg.ball.center) < 0.5 * cfg.ball.radius)
          ok = true;
      });
      hit[size_t(idx)] = ok ? 1 : 0;
    });
    int hits = 0;
    for (uint8_t v : hit) hits += v;
    plan.census_poisson = StripPlanCensus{total, hits, double(hits) / total};
  }

  // Maxwell side at cfg.c: segmented evolution (coarse cadence in the silent
  // bend phases), Cond 5.3 census, and the classical-limit deviation sweep.
  auto evolve_plan = [&](double c_run) {
    EMState s0{0.0, VectorField(g),
               ScalarField::sample(g, [&](Vec2) { return c_run * cfg.b0; }), c_run};
    EvolveOptions eopts;
    eopts.charge_tol = 1e-5;
    // bend 1 (no sources)
    int n1 = std::max(2, int(plan.T1 / 0.05));
    auto t1 = evolve_maxwell(s0, SourceMoments::zero(g, 0.0, plan.T1 / (n1 - 1), n1), plan.T1,
                             eopts);
    // pulse window: slice the plan sources
    EMState s1{0.0, to_real(t1.E_hat.back()), to_real(t1.B_hat.back()), c_run};
    int i_lo = int(std::llround(plan.T1 / cfg.src_dt));
    int i_hi = int(std::llround(plan.T2 / cfg.src_dt));
    std::vector<ScalarField> rhos;
    std::vector<VectorField> js;
    for (int i = i_lo; i <= i_hi; ++i) {
      rhos.push_back(to_real(plan.sources_.rho_hat(i)));
      js.push_back(to_real(plan.sources_.j_hat(i)));
    }
    auto pulse_src = SourceMoments(0.0, cfg.src_dt, std::move(rhos), std::move(js));
    auto t2 = evolve_maxwell(s1, pulse_src, plan.T2 - plan.T1, eopts);
    // bend 2
    EMState s2{0.0, to_real(t2.E_hat.back()), to_real(t2.B_hat.back()), c_run};
    double Tb2 = plan.T - plan.T2;
    int n3 = std::max(2, int(Tb2 / 0.05));
    auto t3 =
        evolve_maxwell(s2, SourceMoments::zero(g, 0.0, Tb2 / (n3 - 1), n3), Tb2, eopts);
    return std::tuple<MaxwellTrajectory, MaxwellTrajectory, MaxwellTrajectory>{t1, t2, t3};
  };

  {
    auto [t1, t2, t3] = evolve_plan(cfg.c);
    plan.maxwell = t2;  // pulse segment retained for inspection

    // stitched movie at a uniform cadence across the segments
    std::vector<VectorField> E_frames;
    std::vector<ScalarField> B_frames;
    double movie_dt = 4.0 * cfg.src_dt;
    int n_frames = int(std::llround(plan.T / movie_dt)) + 1;
    for (int fi = 0; fi < n_frames; ++fi) {
      double t = fi * movie_dt;
      const MaxwellTrajectory* tr = &t1;
      double local = t;
      if (t >= plan.T2) {
        tr = &t3;
        local = t - plan.T2;
      } else if (t >= plan.T1) {
        tr = &t2;
        local = t - plan.T1;
      }
      int i = std::clamp(int(std::lround(local / tr->dt)), 0, tr->samples() - 1);
      E_frames.push_back(to_real(tr->E_hat[size_t(i)]));
      B_frames.push_back(to_real(tr->B_hat[size_t(i)]));
    }
    FieldMovie movie(0.0, movie_dt, E_frames, B_frames);

    int total = cfg.census_nx * cfg.census_ny * cfg.census_dirs * cfg.census_speeds;
    std::vector<uint8_t> hit(size_t(total), 0);
    double t_lo = plan.T / 10.0, t_hi = 9.0 * plan.T / 10.0;
    double dt_space = cfg.census_dt_space > 0.0 ? cfg.census_dt_space : cfg.ball.radius / 12.0;
    parallel_for(0, total, [&](int64_t idx) {
      int rem = int(idx);
      int iv = rem % cfg.census_speeds;
      rem /= cfg.census_speeds;
      int id = rem % cfg.census_dirs;
      rem /= cfg.census_dirs;
      int iy = rem % cfg.census_ny;
      int ix = rem / cfg.census_ny;
      double speed = cfg.R * (iv + 0.5) / cfg.census_speeds;
      double ang = kTwoPi * (id + 0.5) / cfg.census_dirs;
      ForceSpec f = movie.force(LightSpeed::of(cfg.c), 1.0 / cfg.c);
      PhaseState s{{(ix + 0.5) / double(cfg.census_nx), (iy + 0.5) / double(cfg.census_ny)},
                   {speed * std::cos(ang), speed * std::sin(ang)}};
      double vmax_est = cfg.accel_amp + cfg.R + 1.0;
      double dt = dt_space / vmax_est;
      bool ok = false;
      integrate_observe(s, f, 0.0, plan.T, dt, [&](double t, const PhaseState& p) {
        if (!ok && t > t_lo && t < t_hi && norm(p.v) >= 4.0 &&
            torus_dist(p.x, cfg.ball.center) < cfg.ball.radius)
          ok = true;
      });
      hit[size_t(idx)] = ok ? 1 : 0;
    });
    int hits = 0;
    for (uint8_t v : hit) hits += v;
    plan.census_maxwell = StripPlanCensus{total, hits, double(hits) / total};
  }

  // deviation sweep: Maxwell-driven vs Poisson-driven characteristics
  for (double c_run : cfg.c_sweep) {
    auto [t1, t2, t3] = evolve_plan(c_run);
    // comparison window around the pulse
    double w_lo = std::max(0.0, plan.T1 - 0.4);
    double w_hi = std::min(plan.T, plan.T2 + 2.0);
    std::vector<VectorField> E_frames;
    std::vector<ScalarField> B_frames;
    double movie_dt = cfg.src_dt;
    for (double t = w_lo; t <= w_hi + 1e-12; t += movie_dt) {
      const MaxwellTrajectory* tr = &t1;
      double local = t;
      if (t >= plan.T2) {
        tr = &t3;
        local = t - plan.T2;
      } else if (t >= plan.T1) {
        tr = &t2;
        local = t - plan.T1;
      }
      int i = std::clamp(int(std::lround(local / tr->dt)), 0, tr->samples() - 1);
      E_frames.push_back(to_real(tr->E_hat[size_t(i)]));
      B_frames.push_back(to_real(tr->B_hat[size_t(i)]));
    }
    FieldMovie movie(w_lo, movie_dt, E_frames, B_frames);

    const StripPlan& pl = plan;
    std::vector<double> devs(size_t(cfg.deviation_samples), 0.0);
    parallel_for(0, cfg.deviation_samples, [&](int64_t i) {
      double ang = kTwoPi * (i + 0.37) / cfg.deviation_samples;
      double speed = cfg.R * (0.25 + 0.7 * double(i) / cfg.deviation_samples);
      PhaseState s{{std::fmod(0.13 + 0.61 * double(i), 1.0), std::fmod(0.29 + 0.37 * double(i), 1.0)},
                   {speed * std::cos(ang), speed * std::sin(ang)}};
      ForceSpec fm = movie.force(LightSpeed::of(c_run), 1.0 / c_run);
      ForceSpec fp;
      fp.c = LightSpeed::of(c_run);
      fp.b_is_const = true;
      fp.b_const = cfg.b0;
      fp.E = [&pl](double t, Vec2 x) { return pl.grad_phi_bar(t, x); };
      double dt = 2e-3 / (1.0 + cfg.accel_amp / 10.0);
      PhaseState a = s, b = s;
      double worst = 0.0;
      double t = w_lo;
      int steps = int((w_hi - w_lo) / dt);
      for (int k = 0; k < steps; ++k) {
        a = rk4_step(a, fm, t, dt);
        b = rk4_step(b, fp, t, dt);
        t += dt;
        worst = std::max(worst, torus_dist(a.x, b.x) + norm(a.v - b.v));
      }
      devs[size_t(i)] = worst;
    });
    double sup = 0.0;
    for (double d : devs) sup = std::max(sup, d);
    plan.deviation_vs_c.emplace_back(c_run, sup);
  }

  plan.rho_c_invariance = 0.0;  // rho/j are built from c-independent tables
  return plan;
}

}  // namespace vmt
