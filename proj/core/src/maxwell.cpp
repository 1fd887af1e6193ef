#include "vmtorus/maxwell.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vmtorus/parallel.hpp"

namespace vmt {

void EMState::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("EMState: c must be positive");
  if (!(E.grid == B.grid)) throw std::invalid_argument("EMState: E and B on different grids");
  E.check_finite("EMState.E");
  B.check_finite("EMState.B");
}

SourceMoments::SourceMoments(double t0, double dt, std::vector<ScalarField> rho,
                             std::vector<VectorField> j)
    : t0_(t0), dt_(dt) {
  if (rho.size() != j.size()) throw std::invalid_argument("SourceMoments: rho/j count mismatch");
  if (rho.empty()) throw std::invalid_argument("SourceMoments: no samples");
  if (rho.size() > 1 && !(dt > 0.0)) throw std::invalid_argument("SourceMoments: dt must be > 0");
  grid_ = rho[0].grid;
  rho_hat_.reserve(rho.size());
  j_hat_.reserve(j.size());
  for (size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i].grid == grid_) || !(j[i].grid == grid_))
      throw std::invalid_argument("SourceMoments: grid mismatch across samples");
    rho_hat_.push_back(to_spectral(rho[i]));
    j_hat_.push_back(to_spectral(j[i]));
  }
}

SourceMoments SourceMoments::zero(GridSpec g, double t0, double dt, int count) {
  g.validate();
  std::vector<ScalarField> rho(static_cast<size_t>(count), ScalarField(g));
  std::vector<VectorField> j(static_cast<size_t>(count), VectorField(g));
  return SourceMoments(t0, dt, std::move(rho), std::move(j));
}

CompatibilityReport check_compatibility(const EMState& state, const ScalarField& rho0,
                                        double tol) {
  if (!(state.E.grid == rho0.grid))
    throw std::invalid_argument("check_compatibility: grid mismatch");
  SpectralScalar div = divergence(to_spectral(state.E));
  SpectralScalar rho = to_spectral(rho0);
  double rho_mean = mean(rho);
  int K = div.grid.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      cplx target = (k1 == 0 && k2 == 0) ? cplx{} : rho.at(k1, k2);
      if (k1 == 0 && k2 == 0) target = rho.at(0, 0) - rho_mean;  // = 0
      div.at(k1, k2) -= target;
    }
  double res = max_abs(to_real(div));
  return CompatibilityReport{res, tol, res < tol};
}

namespace {

// d/dt of a uniformly sampled sequence, 4th order in the interior with
// one-sided stencils at the ends (order degrades gracefully for short series).
template <class T>
std::vector<T> time_derivative(const std::vector<T>& y, double dt) {
  int m = int(y.size());
  std::vector<T> d(y.size());
  if (m < 2) throw std::invalid_argument("time_derivative: need >= 2 samples");
  auto first_order = [&](int i, int j) { return (y[size_t(j)] - y[size_t(i)]) * (1.0 / dt); };
  if (m < 5) {
    for (int i = 0; i < m; ++i) {
      if (i == 0)
        d[0] = first_order(0, 1);
      else if (i == m - 1)
        d[size_t(m - 1)] = first_order(m - 2, m - 1);
      else
        d[size_t(i)] = (y[size_t(i + 1)] - y[size_t(i - 1)]) * (0.5 / dt);
    }
    return d;
  }
  for (int i = 0; i < m; ++i) {
    if (i >= 2 && i <= m - 3) {
      d[size_t(i)] = (y[size_t(i - 2)] - y[size_t(i + 2)] +
                      8.0 * (y[size_t(i + 1)] - y[size_t(i - 1)])) *
                     (1.0 / (12.0 * dt));
    } else if (i < 2) {
      int o = i;  // 5-point one-sided / offset stencils, 4th order
      const double w0[5] = {-25.0 / 12, 4.0, -3.0, 4.0 / 3, -1.0 / 4};
      const double w1[5] = {-1.0 / 4, -5.0 / 6, 3.0 / 2, -1.0 / 2, 1.0 / 12};
      const double* w = (o == 0) ? w0 : w1;
      T acc = y[0] * w[0];
      for (int j = 1; j < 5; ++j) acc = acc + y[size_t(j)] * w[j];
      d[size_t(i)] = acc * (1.0 / dt);
    } else {
      int o = m - 1 - i;
      const double w0[5] = {25.0 / 12, -4.0, 3.0, -4.0 / 3, 1.0 / 4};
      const double w1[5] = {1.0 / 4, 5.0 / 6, -3.0 / 2, 1.0 / 2, -1.0 / 12};
      const double* w = (o == 0) ? w0 : w1;
      T acc = y[size_t(m - 1)] * w[0];
      for (int j = 1; j < 5; ++j) acc = acc + y[size_t(m - 1 - j)] * w[j];
      d[size_t(i)] = acc * (1.0 / dt);
    }
  }
  return d;
}

}  // namespace

double check_charge_conservation(const SourceMoments& src) {
  if (src.samples() < 2)
    throw std::invalid_argument("check_charge_conservation: need >= 2 samples");
  int K = src.grid().k_max;
  int modes = src.grid().modes();
  double worst = 0.0;
  for (int i = 0; i < src.samples(); ++i) {
    // residual_hat = d_t rho_hat + i xi . j_hat, evaluated mode-wise
    SpectralScalar res(src.grid());
    for (int idx = 0; idx < modes; ++idx) {
      int k1 = idx / src.grid().modes_per_dim() - K;
      int k2 = idx % src.grid().modes_per_dim() - K;
      res.coeffs[size_t(idx)] = cplx(0, xi(k1)) * src.j_hat(i).c1[size_t(idx)] +
                                cplx(0, xi(k2)) * src.j_hat(i).c2[size_t(idx)];
    }
    // add time derivative of rho at sample i (recompute stencil locally)
    std::vector<cplx> col(size_t(src.samples()), cplx{});
    for (int idx = 0; idx < modes; ++idx) {
      for (int s = 0; s < src.samples(); ++s) col[size_t(s)] = src.rho_hat(s).coeffs[size_t(idx)];
      auto d = time_derivative(col, src.dt());
      res.coeffs[size_t(idx)] += d[size_t(i)];
    }
    worst = std::max(worst, max_abs(to_real(res)));
  }
  return worst;
}

double check_zero_mean_current(const SourceMoments& src) {
  double worst = 0.0;
  for (int i = 0; i < src.samples(); ++i) {
    Vec2 m = mean(src.j_hat(i));
    worst = std::max(worst, std::max(std::abs(m.x), std::abs(m.y)));
  }
  return worst;
}

EMState MaxwellTrajectory::state(int i) const {
  EMState s;
  s.t = time(i);
  s.c = c;
  s.E = to_real(E_hat[size_t(i)]);
  s.B = to_real(B_hat[size_t(i)]);
  return s;
}

double MaxwellTrajectory::mode_energy(int i) const {
  return power(E_hat[size_t(i)]) + power(B_hat[size_t(i)]);
}

namespace {

// Moments W_m = integral over [0,delta] of u^m exp(i mu u) du, m = 0..3,
// by series in (i mu u); converges fast since |mu delta| <= max_panel_phase.
void kernel_moments(double mu, double delta, cplx out[4]) {
  const cplx imu(0.0, mu);
  for (int m = 0; m < 4; ++m) {
    cplx term = std::pow(delta, m + 1) / double(m + 1);
    cplx acc = term;
    cplx z = 1.0;
    for (int j = 1; j < 40; ++j) {
      z *= imu * delta / double(j);
      cplx t = z * std::pow(delta, m + 1) / double(m + 1 + j);
      acc += t;
      if (std::abs(t) < 1e-18 * (1.0 + std::abs(acc))) break;
    }
    out[m] = acc;
  }
}

// Cubic (or lower order) interpolation coefficients on the step [0, h] from
// sample values y at stencil offsets off*h: p(u) = sum c_m u^m.
struct StencilMatrix {
  double inv[4][4];
  int size = 0;
};

StencilMatrix make_stencil(const std::vector<double>& offsets) {
  // Solve the Vandermonde system V c = y; store V^{-1}.
  int s = int(offsets.size());
  double V[4][4] = {};
  for (int r = 0; r < s; ++r) {
    double p = 1.0;
    for (int col = 0; col < s; ++col) {
      V[r][col] = p;
      p *= offsets[size_t(r)];
    }
  }
  // Gauss-Jordan inverse (tiny fixed-size system)
  double aug[4][8] = {};
  for (int r = 0; r < s; ++r) {
    for (int col = 0; col < s; ++col) aug[r][col] = V[r][col];
    aug[r][s + r] = 1.0;
  }
  for (int col = 0; col < s; ++col) {
    int piv = col;
    for (int r = col + 1; r < s; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[piv][col])) piv = r;
    for (int j = 0; j < 2 * s; ++j) std::swap(aug[col][j], aug[piv][j]);
    double d = aug[col][col];
    for (int j = 0; j < 2 * s; ++j) aug[col][j] /= d;
    for (int r = 0; r < s; ++r) {
      if (r == col) continue;
      double f = aug[r][col];
      for (int j = 0; j < 2 * s; ++j) aug[r][j] -= f * aug[col][j];
    }
  }
  StencilMatrix out;
  out.size = s;
  for (int r = 0; r < s; ++r)
    for (int col = 0; col < s; ++col) out.inv[r][col] = aug[r][s + col];
  return out;
}

// Interpolation plan for one step: which samples to read and how to map them
// to monomial coefficients in the local step coordinate u in [0, h].
struct StepPlan {
  int base = 0;  // first sample index of the stencil
  StencilMatrix mat;
};

std::vector<StepPlan> make_step_plans(int samples, double h) {
  int steps = samples - 1;
  std::vector<StepPlan> plans{size_t(steps)};
  int order = std::min(4, samples);
  for (int i = 0; i < steps; ++i) {
    int base;
    if (order < 4) {
      base = 0;
    } else {
      base = std::clamp(i - 1, 0, samples - 4);
    }
    std::vector<double> offs(size_t(order), 0.0);
    for (int j = 0; j < order; ++j) offs[size_t(j)] = (base + j - i) * h;
    plans[size_t(i)].base = base;
    plans[size_t(i)].mat = make_stencil(offs);
  }
  return plans;
}

// p coefficients from samples via the stencil matrix.
void coeffs_from_samples(const StepPlan& plan, const cplx* samples, cplx c[4]) {
  int s = plan.mat.size;
  for (int m = 0; m < 4; ++m) c[m] = cplx{};
  for (int m = 0; m < s; ++m)
    for (int j = 0; j < s; ++j) c[m] += plan.mat.inv[m][j] * samples[plan.base + j];
}

// Shift p(u) -> p(a + u): returns coefficients in the shifted variable.
void shift_cubic(const cplx c[4], double a, cplx out[4]) {
  out[0] = c[0] + a * (c[1] + a * (c[2] + a * c[3]));
  out[1] = c[1] + a * (2.0 * c[2] + 3.0 * a * c[3]);
  out[2] = c[2] + 3.0 * a * c[3];
  out[3] = c[3];
}

}  // namespace

MaxwellTrajectory evolve_maxwell(const EMState& state0, const SourceMoments& src, double T,
                                 const EvolveOptions& opts) {
  state0.validate();
  if (!(state0.E.grid == src.grid()))
    throw std::invalid_argument("evolve_maxwell: state/source grid mismatch");
  if (std::abs(state0.t - src.t0()) > 1e-12)
    throw std::invalid_argument("evolve_maxwell: state0.t must equal the first source sample time");
  double h = src.dt();
  int steps = (src.samples() == 1) ? 0 : int(std::llround(T / h));
  if (src.samples() > 1) {
    if (std::abs(steps * h - T) > 1e-9 * std::max(1.0, T))
      throw std::invalid_argument("evolve_maxwell: T must align with the source sampling");
    if (steps > src.samples() - 1)
      throw std::invalid_argument("evolve_maxwell: source samples do not cover [0, T]");
  } else if (T != 0.0) {
    throw std::invalid_argument("evolve_maxwell: a single source sample only supports T = 0");
  }

  if (opts.enforce_checks) {
    auto compat = check_compatibility(state0, to_real(src.rho_hat(0)), opts.compat_tol);
    if (!compat.pass)
      throw std::runtime_error("evolve_maxwell: initial data violate div E = rho - mean(rho): " +
                               std::to_string(compat.max_residual));
    if (src.samples() >= 2) {
      double lcc = check_charge_conservation(src);
      if (lcc > opts.charge_tol)
        throw std::runtime_error(
            "evolve_maxwell: source violates local charge conservation: residual " +
            std::to_string(lcc));
    }
  }

  const GridSpec g = state0.E.grid;
  const int K = g.k_max;
  const int mdim = g.modes_per_dim();
  const double c = state0.c;

  SpectralVector E0 = to_spectral(state0.E);
  SpectralScalar B0 = to_spectral(state0.B);

  MaxwellTrajectory out;
  out.grid = g;
  out.c = c;
  out.t0 = state0.t;
  out.dt = h;
  out.E_hat.assign(size_t(steps + 1), SpectralVector(g));
  out.B_hat.assign(size_t(steps + 1), SpectralScalar(g));
  out.E_hat[0] = E0;
  out.B_hat[0] = B0;
  if (steps == 0) return out;

  auto plans = make_step_plans(src.samples(), h);

  // Global max source magnitude for mode skipping.
  double src_max = 0.0;
  for (int i = 0; i < src.samples(); ++i) {
    for (const cplx& v : src.j_hat(i).c1) src_max = std::max(src_max, std::abs(v));
    for (const cplx& v : src.j_hat(i).c2) src_max = std::max(src_max, std::abs(v));
  }

  // Upper half of the mode table (k1 > 0, or k1 == 0 and k2 > 0); the lower
  // half is mirrored by Hermitian symmetry after assembly.
  std::vector<std::pair<int, int>> half;
  half.reserve(size_t(g.modes() / 2));
  for (int k1 = 0; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      half.emplace_back(k1, k2);
    }

  parallel_for(0, int64_t(half.size()), [&](int64_t hi) {
    auto [k1, k2] = half[size_t(hi)];
    int idx = (k1 + K) * mdim + (k2 + K);
    Vec2 xiv{xi(k1), xi(k2)};
    double xin = norm(xiv);
    double omega = c * xin;
    Vec2 lhat{xiv.x / xin, xiv.y / xin};
    Vec2 tau{-xiv.y / xin, xiv.x / xin};

    // Transverse source s(t_i) = -tau . j_hat, and rho for the slaved part.
    std::vector<cplx> s(size_t(src.samples()), cplx{});
    bool active = false;
    for (int i = 0; i < src.samples(); ++i) {
      cplx j1 = src.j_hat(i).c1[size_t(idx)];
      cplx j2 = src.j_hat(i).c2[size_t(idx)];
      s[size_t(i)] = -(tau.x * j1 + tau.y * j2);
      if (std::abs(j1) + std::abs(j2) > opts.mode_skip_rel * src_max) active = true;
    }

    cplx eT = tau.x * E0.c1[size_t(idx)] + tau.y * E0.c2[size_t(idx)];
    cplx B = B0.coeffs[size_t(idx)];
    // Longitudinal defect: eL(t) = -i rho_hat(t)/|xi| + dL (constraint slaving).
    cplx eL0 = lhat.x * E0.c1[size_t(idx)] + lhat.y * E0.c2[size_t(idx)];
    cplx dL = eL0 - (-cplx(0, 1) * src.rho_hat(0).coeffs[size_t(idx)] / xin);

    int panels = std::max(1, int(std::ceil(omega * h / opts.max_panel_phase)));
    double delta = h / panels;
    cplx W[4];
    kernel_moments(-omega, delta, W);  // for M+, kernel exp(-i omega u) inside
    cplx Wc[4] = {std::conj(W[0]), std::conj(W[1]), std::conj(W[2]), std::conj(W[3])};
    double cwh = std::cos(omega * h), swh = std::sin(omega * h);

    for (int step = 0; step < steps; ++step) {
      cplx pc[4];
      coeffs_from_samples(plans[size_t(step)], s.data(), pc);
      bool step_active = active && (std::abs(pc[0]) + std::abs(pc[1]) + std::abs(pc[2]) +
                                    std::abs(pc[3])) > opts.mode_skip_rel * src_max;

      cplx Mp{}, Mm{};
      if (step_active) {
        for (int p = 0; p < panels; ++p) {
          double a = p * delta;
          cplx sc[4];
          shift_cubic(pc, a, sc);
          cplx inner_p = sc[0] * W[0] + sc[1] * W[1] + sc[2] * W[2] + sc[3] * W[3];
          cplx inner_m = sc[0] * Wc[0] + sc[1] * Wc[1] + sc[2] * Wc[2] + sc[3] * Wc[3];
          double ph = omega * (h - a);
          cplx e_p(std::cos(ph), std::sin(ph));
          Mp += e_p * inner_p;
          Mm += std::conj(e_p) * inner_m;
        }
      }
      cplx Ch = 0.5 * (Mp + Mm);
      cplx Sh = (Mp - Mm) / cplx(0.0, 2.0);

      cplx eT_new = cwh * eT - cplx(0, 1) * swh * B + Ch;
      cplx B_new = cwh * B - cplx(0, 1) * swh * eT - cplx(0, 1) * Sh;
      eT = eT_new;
      B = B_new;

      cplx eL = -cplx(0, 1) * src.rho_hat(step + 1).coeffs[size_t(idx)] / xin + dL;
      auto& Eh = out.E_hat[size_t(step + 1)];
      Eh.c1[size_t(idx)] = lhat.x * eL + tau.x * eT;
      Eh.c2[size_t(idx)] = lhat.y * eL + tau.y * eT;
      out.B_hat[size_t(step + 1)].coeffs[size_t(idx)] = B;
    }
  });

  // Mode 0: dE0/dt = -j0 (cubic panel integration), dB0/dt = 0.
  {
    int idx0 = (0 + K) * mdim + (0 + K);
    std::vector<cplx> j1(size_t(src.samples()), cplx{}), j2(size_t(src.samples()), cplx{});
    for (int i = 0; i < src.samples(); ++i) {
      j1[size_t(i)] = src.j_hat(i).c1[size_t(idx0)];
      j2[size_t(i)] = src.j_hat(i).c2[size_t(idx0)];
    }
    cplx e1 = E0.c1[size_t(idx0)], e2 = E0.c2[size_t(idx0)];
    cplx b = B0.coeffs[size_t(idx0)];
    for (int step = 0; step < steps; ++step) {
      cplx pc1[4], pc2[4];
      coeffs_from_samples(plans[size_t(step)], j1.data(), pc1);
      coeffs_from_samples(plans[size_t(step)], j2.data(), pc2);
      auto poly_int = [&](const cplx pc[4]) {
        cplx acc{};
        double hp = h;
        for (int m = 0; m < 4; ++m) {
          acc += pc[m] * hp / double(m + 1);
          hp *= h;
        }
        return acc;
      };
      e1 -= poly_int(pc1);
      e2 -= poly_int(pc2);
      out.E_hat[size_t(step + 1)].c1[size_t(idx0)] = e1;
      out.E_hat[size_t(step + 1)].c2[size_t(idx0)] = e2;
      out.B_hat[size_t(step + 1)].coeffs[size_t(idx0)] = b;
    }
  }

  // Mirror the lower half by Hermitian symmetry.
  for (int i = 1; i <= steps; ++i) {
    auto& Eh = out.E_hat[size_t(i)];
    auto& Bh = out.B_hat[size_t(i)];
    for (auto [k1, k2] : half) {
      int src_idx = (k1 + K) * mdim + (k2 + K);
      int dst_idx = (-k1 + K) * mdim + (-k2 + K);
      Eh.c1[size_t(dst_idx)] = std::conj(Eh.c1[size_t(src_idx)]);
      Eh.c2[size_t(dst_idx)] = std::conj(Eh.c2[size_t(src_idx)]);
      Bh.coeffs[size_t(dst_idx)] = std::conj(Bh.coeffs[size_t(src_idx)]);
    }
  }
  return out;
}

SpectralVector solve_poisson(const SpectralScalar& rho_hat) {
  SpectralVector E(rho_hat.grid);
  int K = rho_hat.grid.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      int i = E.idx(k1, k2);
      double n2 = xi(k1) * xi(k1) + xi(k2) * xi(k2);
      cplx r = rho_hat.coeffs[size_t(i)];
      E.c1[size_t(i)] = -cplx(0, xi(k1)) * r / n2;
      E.c2[size_t(i)] = -cplx(0, xi(k2)) * r / n2;
    }
  return E;
}

VectorField solve_poisson(const ScalarField& rho) {
  return to_real(solve_poisson(to_spectral(rho)));
}

SpectralScalar solve_poisson_scalar(const SpectralScalar& h_hat) {
  SpectralScalar theta(h_hat.grid);
  int K = h_hat.grid.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      int i = theta.idx(k1, k2);
      double n2 = xi(k1) * xi(k1) + xi(k2) * xi(k2);
      theta.coeffs[size_t(i)] = -h_hat.coeffs[size_t(i)] / n2;
    }
  return theta;
}

TildeFields::TildeFields(const VectorField& E0, const ScalarField& B0, const ScalarField& rho0,
                         double c)
    : grid_(E0.grid), c_(c) {
  if (!(E0.grid == B0.grid) || !(E0.grid == rho0.grid))
    throw std::invalid_argument("TildeFields: grid mismatch");
  E0_hat_ = to_spectral(E0);
  B0_hat_ = to_spectral(B0);
  Einf0_hat_ = solve_poisson(to_spectral(rho0));
}

SpectralScalar TildeFields::B_hat(double t) const {
  SpectralScalar out(grid_);
  int K = grid_.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      int i = out.idx(k1, k2);
      double xin = std::hypot(xi(k1), xi(k2));
      double ph = t * c_ * xin;
      cplx xi_wedge_E = xi(k1) * E0_hat_.c2[size_t(i)] - xi(k2) * E0_hat_.c1[size_t(i)];
      out.coeffs[size_t(i)] = -cplx(0, 1) * (xi_wedge_E / xin) * std::sin(ph) +
                              B0_hat_.coeffs[size_t(i)] * std::cos(ph);
    }
  return out;
}

SpectralVector TildeFields::E_hat(double t) const {
  SpectralVector out(grid_);
  int K = grid_.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      int i = out.idx(k1, k2);
      double xin = std::hypot(xi(k1), xi(k2));
      double ph = t * c_ * xin;
      cplx b0 = B0_hat_.coeffs[size_t(i)];
      cplx trans1 = E0_hat_.c1[size_t(i)] - Einf0_hat_.c1[size_t(i)];
      cplx trans2 = E0_hat_.c2[size_t(i)] - Einf0_hat_.c2[size_t(i)];
      out.c1[size_t(i)] = cplx(0, 1) * (xi(k2) / xin) * b0 * std::sin(ph) + trans1 * std::cos(ph);
      out.c2[size_t(i)] = cplx(0, 1) * (-xi(k1) / xin) * b0 * std::sin(ph) + trans2 * std::cos(ph);
    }
  return out;
}

ApproxBound approx_constants(const SourceMoments& src, double c_min) {
  if (src.samples() < 2) throw std::invalid_argument("approx_constants: need >= 2 samples");
  if (!(c_min > 0.0)) throw std::invalid_argument("approx_constants: c_min must be positive");
  double w = 1.0 / c_min;
  int K = src.grid().k_max;
  int mdim = src.grid().modes_per_dim();
  int m = src.samples();
  ApproxBound out;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      int idx = (k1 + K) * mdim + (k2 + K);
      double kn = std::hypot(double(k1), double(k2));
      std::vector<cplx> rho(size_t(m), cplx{}), j1(size_t(m), cplx{}), j2(size_t(m), cplx{});
      for (int i = 0; i < m; ++i) {
        rho[size_t(i)] = src.rho_hat(i).coeffs[size_t(idx)];
        j1[size_t(i)] = src.j_hat(i).c1[size_t(idx)];
        j2[size_t(i)] = src.j_hat(i).c2[size_t(idx)];
      }
      auto drho = time_derivative(rho, src.dt());
      auto ddrho = time_derivative(drho, src.dt());
      auto dj1 = time_derivative(j1, src.dt());
      auto dj2 = time_derivative(j2, src.dt());
      auto sup = [](const std::vector<cplx>& v) {
        double s = 0.0;
        for (const cplx& z : v) s = std::max(s, std::abs(z));
        return s;
      };
      auto sup2 = [&](const std::vector<cplx>& a, const std::vector<cplx>& b) {
        return std::max(sup(a), sup(b));
      };
      double j_sup = sup2(j1, j2);
      double dj_sup = sup2(dj1, dj2);
      out.C_prime_rho_j +=
          sup(ddrho) / (kn * kn) + w * (sup(drho) / (kn * kn) + j_sup / kn) + dj_sup / kn;
      out.C_rho_j += dj_sup + 2.0 * w * j_sup;
    }
  return out;
}

ApproxSweepResult verify_approx_lemma(const EMState& state0, const SourceMoments& src,
                                      const std::vector<double>& c_list, double T,
                                      const EvolveOptions& opts) {
  double zm = check_zero_mean_current(src);
  if (zm > 1e-10)
    throw std::runtime_error("verify_approx_lemma: zero-mean current violated: " +
                             std::to_string(zm));
  ApproxSweepResult result;
  result.c_list = c_list;
  result.bound = approx_constants(src);
  result.bound_ok = true;

  Vec2 meanE0 = grid_mean(state0.E);
  double meanB0 = grid_mean(state0.B);
  ScalarField rho0 = to_real(src.rho_hat(0));

  for (double c : c_list) {
    EMState s0 = state0;
    s0.c = c;
    MaxwellTrajectory traj = evolve_maxwell(s0, src, T, opts);
    TildeFields tilde(state0.E, state0.B, rho0, c);
    double supE = 0.0, supB = 0.0;
    for (int i = 0; i < traj.samples(); ++i) {
      double t = traj.time(i) - traj.t0;
      SpectralVector Ediff = traj.E_hat[size_t(i)];
      SpectralVector Einf = solve_poisson(src.rho_hat(i));
      SpectralVector Et = tilde.E_hat(t);
      for (size_t q = 0; q < Ediff.c1.size(); ++q) {
        Ediff.c1[q] -= Einf.c1[q] + Et.c1[q];
        Ediff.c2[q] -= Einf.c2[q] + Et.c2[q];
      }
      int i00 = Ediff.idx(0, 0);
      Ediff.c1[size_t(i00)] -= meanE0.x;
      Ediff.c2[size_t(i00)] -= meanE0.y;

      SpectralScalar Bdiff = traj.B_hat[size_t(i)];
      SpectralScalar Bt = tilde.B_hat(t);
      for (size_t q = 0; q < Bdiff.coeffs.size(); ++q) Bdiff.coeffs[q] -= Bt.coeffs[q];
      Bdiff.coeffs[size_t(i00)] -= meanB0;

      double errE = max_abs(to_real(Ediff));
      double errB = max_abs(to_real(Bdiff));
      double boundE = result.bound.C_prime_rho_j * (t + 1.0) / c;
      double boundB = result.bound.C_rho_j * (t + 1.0) / c;
      if (errE > boundE) result.bound_ok = false;
      result.rows.push_back({c, t, errE, errB, boundE, boundB});
      supE = std::max(supE, errE);
      supB = std::max(supB, errB);
    }
    result.supE.push_back(supE);
    result.supB.push_back(supB);
  }

  auto fit_slope = [&](const std::vector<double>& sup) {
    double mx = 0, my = 0;
    int n = int(c_list.size());
    std::vector<double> lx(size_t(n), 0.0), ly(size_t(n), 0.0);
    for (int i = 0; i < n; ++i) {
      lx[size_t(i)] = std::log(c_list[size_t(i)]);
      ly[size_t(i)] = std::log(std::max(sup[size_t(i)], 1e-300));
      mx += lx[size_t(i)];
      my += ly[size_t(i)];
    }
    mx /= n;
    my /= n;
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
      num += (lx[size_t(i)] - mx) * (ly[size_t(i)] - my);
      den += (lx[size_t(i)] - mx) * (lx[size_t(i)] - mx);
    }
    return den > 0 ? num / den : 0.0;
  };
  if (c_list.size() >= 2) {
    result.slopeE = fit_slope(result.supE);
    result.slopeB = fit_slope(result.supB);
  }
  return result;
}

}  // namespace vmt
