#include "vmtorus/control.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vmtorus/parallel.hpp"

namespace vmt {

namespace {

constexpr double kPi = std::numbers::pi;

// Quintic smoothstep: p(0) = 0, p(1) = 1, p', p'' vanish at both ends.
inline double smoothstep5(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline double smoothstep5_d(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return u * u * (30.0 + u * (-60.0 + 30.0 * u));
}

inline double smoothstep5_dd(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return u * (60.0 + u * (-180.0 + 120.0 * u));
}

}  // namespace

Vec2 bump_current(const PsiBump& b, Vec2 x) {
  Vec2 d = torus_delta(x, b.center);
  double rho2 = (d.x * d.x + d.y * d.y) / (b.radius * b.radius);
  if (rho2 >= 1.0) return {0.0, 0.0};
  // psi = amp * p(1 - rho^2); grad-perp psi = (d2 psi, -d1 psi)
  double pd = smoothstep5_d(1.0 - rho2);
  double gpsi = -2.0 * b.amp * pd / (b.radius * b.radius);
  return {gpsi * d.y, -gpsi * d.x};
}

double bump_current_divergence(const PsiBump& b, Vec2 x) {
  // d1 j1 + d2 j2 with j = (g(rho2) dy, -g(rho2) dx), g = -2 amp p'/r^2:
  // d1 j1 = g'(rho2) (2 dx / r^2) dy, d2 j2 = -g'(rho2) (2 dy / r^2) dx.
  Vec2 d = torus_delta(x, b.center);
  double r2 = b.radius * b.radius;
  double rho2 = (d.x * d.x + d.y * d.y) / r2;
  if (rho2 >= 1.0) return 0.0;
  double gp = 2.0 * b.amp * smoothstep5_dd(1.0 - rho2) / (r2 * r2);
  double term1 = gp * 2.0 * d.x * d.y;
  double term2 = -gp * 2.0 * d.y * d.x;
  return term1 + term2;
}

Vec2 carrier_current(const StripCarrier& s, Vec2 x) {
  double coord = (s.axis == 0) ? x.y : x.x;
  double w = coord - s.center;
  w -= std::round(w);
  double u = 1.0 - (w * w) / (s.half_width * s.half_width);
  if (u <= 0.0) return {0.0, 0.0};
  double chi = s.amp * smoothstep5(u);
  return (s.axis == 0) ? Vec2{chi, 0.0} : Vec2{0.0, chi};
}

void SteeringProblem::validate() const {
  grid.validate();
  if (!(T > 0.0)) throw std::invalid_argument("SteeringProblem: T must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("SteeringProblem: c must be positive");
  if (k_ctrl < 0 || k_ctrl > grid.k_max)
    throw std::invalid_argument("SteeringProblem: k_ctrl must be within the grid truncation");
  double d0 = max_abs(to_real(divergence(to_spectral(E0))));
  double d1 = max_abs(to_real(divergence(to_spectral(E1))));
  if (d0 > 1e-8 || d1 > 1e-8)
    throw std::invalid_argument("SteeringProblem: target states must be divergence-free");
}

std::vector<double> controlled_dofs(const SpectralVector& E, const SpectralScalar& B,
                                    int k_ctrl) {
  std::vector<double> dofs;
  dofs.reserve(size_t(6 * (2 * k_ctrl + 1) * (2 * k_ctrl + 1)));
  for (int k1 = -k_ctrl; k1 <= k_ctrl; ++k1)
    for (int k2 = -k_ctrl; k2 <= k_ctrl; ++k2) {
      int i = E.idx(k1, k2);
      dofs.push_back(E.c1[size_t(i)].real());
      dofs.push_back(E.c1[size_t(i)].imag());
      dofs.push_back(E.c2[size_t(i)].real());
      dofs.push_back(E.c2[size_t(i)].imag());
      dofs.push_back(B.coeffs[size_t(i)].real());
      dofs.push_back(B.coeffs[size_t(i)].imag());
    }
  return dofs;
}

namespace {

Vec2 element_current(const ControlBasis& basis, int element, Vec2 x) {
  if (element < int(basis.bumps.size())) return bump_current(basis.bumps[size_t(element)], x);
  return carrier_current(basis.carriers[size_t(element - int(basis.bumps.size()))], x);
}

VectorField element_field(const ControlBasis& basis, int element, GridSpec g) {
  return VectorField::sample(
      g, [&](Vec2 x) { return element_current(basis, element, x); });
}

void check_support(const ControlBasis& basis, const ControlSet& omega) {
  // probe each element's support on a polar/band lattice
  for (const auto& b : basis.bumps) {
    for (int ir = 0; ir < 12; ++ir)
      for (int ia = 0; ia < 32; ++ia) {
        double r = b.radius * (ir + 0.5) / 12.0;
        double ang = 2.0 * kPi * ia / 32.0;
        Vec2 x = torus_wrap(b.center + Vec2{r * std::cos(ang), r * std::sin(ang)});
        if (!omega.contains(x))
          throw std::invalid_argument("ControlBasis: bump support leaks outside omega");
      }
  }
  for (const auto& s : basis.carriers) {
    for (int iw = 0; iw < 12; ++iw)
      for (int it = 0; it < 48; ++it) {
        double w = s.half_width * ((iw + 0.5) / 12.0 * 2.0 - 1.0);
        double t = (it + 0.5) / 48.0;
        Vec2 x = (s.axis == 0) ? Vec2{t, s.center + w} : Vec2{s.center + w, t};
        if (!omega.contains(torus_wrap(x)))
          throw std::invalid_argument("ControlBasis: carrier support leaks outside omega");
      }
  }
}

SourceMoments basis_source(const ControlBasis& basis, const VectorField& element_j, int l,
                           double T, double dt, int samples) {
  GridSpec g = element_j.grid;
  std::vector<ScalarField> rhos(static_cast<size_t>(samples), ScalarField(g));
  std::vector<VectorField> js;
  js.reserve(size_t(samples));
  for (int i = 0; i < samples; ++i) {
    double theta = std::sin((l + 1) * kPi * (i * dt) / T);
    VectorField f(g);
    for (size_t q = 0; q < f.c1.size(); ++q) {
      f.c1[q] = theta * element_j.c1[q];
      f.c2[q] = theta * element_j.c2[q];
    }
    js.push_back(std::move(f));
  }
  (void)basis;
  return SourceMoments(0.0, dt, std::move(rhos), std::move(js));
}

}  // namespace

Reachability assemble_reachability(const SteeringProblem& problem, const ControlBasis& basis,
                                   const ControlSet& omega) {
  problem.validate();
  check_support(basis, omega);

  GridSpec g = problem.grid;
  int samples = int(std::llround(problem.T / problem.src_dt)) + 1;
  double dt = problem.T / (samples - 1);

  EvolveOptions opts;
  opts.enforce_checks = false;  // rho = 0 and transverse currents by design

  Reachability reach;
  int dofs = 6 * (2 * problem.k_ctrl + 1) * (2 * problem.k_ctrl + 1);
  reach.rows = dofs;
  reach.cols = basis.columns();
  reach.matrix.assign(size_t(dofs) * basis.columns(), 0.0);

  // free evolution of the initial data
  {
    EMState s0{0.0, problem.E0, problem.B0, problem.c};
    auto traj = evolve_maxwell(s0, SourceMoments::zero(g, 0.0, dt, samples), problem.T, opts);
    reach.free_final =
        controlled_dofs(traj.E_hat.back(), traj.B_hat.back(), problem.k_ctrl);
  }
  reach.target = controlled_dofs(to_spectral(problem.E1), to_spectral(problem.B1), problem.k_ctrl);

  std::vector<VectorField> elements;
  for (int e = 0; e < basis.elements(); ++e) elements.push_back(element_field(basis, e, g));

  parallel_for(0, basis.columns(), [&](int64_t col) {
    int e = int(col) / basis.n_time;
    int l = int(col) % basis.n_time;
    auto src = basis_source(basis, elements[size_t(e)], l, problem.T, dt, samples);
    EMState zero{0.0, VectorField(g), ScalarField(g), problem.c};
    auto traj = evolve_maxwell(zero, src, problem.T, opts);
    auto dofs_col = controlled_dofs(traj.E_hat.back(), traj.B_hat.back(), problem.k_ctrl);
    for (int r = 0; r < reach.rows; ++r)
      reach.matrix[size_t(r) * reach.cols + size_t(col)] = dofs_col[size_t(r)];
  });
  return reach;
}

SteeringResult solve_steering(const SteeringProblem& problem, const ControlBasis& basis,
                              const ControlSet& omega) {
  double meanB0 = grid_mean(problem.B0);
  double meanB1 = grid_mean(problem.B1);
  if (std::abs(meanB0 - meanB1) > 1e-10)
    throw std::invalid_argument(
        "solve_steering: mean(B1) != mean(B0); the torus-average of B is unreachable "
        "(dB^0/dt = 0), mismatch = " +
        std::to_string(meanB1 - meanB0));

  Reachability reach = assemble_reachability(problem, basis, omega);
  if (reach.cols == 0) throw std::invalid_argument("solve_steering: empty control basis");

  Eigen::MatrixXd A(reach.rows, reach.cols);
  Eigen::VectorXd b(reach.rows);
  for (int r = 0; r < reach.rows; ++r) {
    for (int cidx = 0; cidx < reach.cols; ++cidx)
      A(r, cidx) = reach.matrix[size_t(r) * reach.cols + size_t(cidx)];
    b(r) = reach.target[size_t(r)] - reach.free_final[size_t(r)];
  }
  // Ridge on column-equilibrated responses, solved through the SVD (the
  // normal equations lose the weakly-reachable directions to roundoff).
  Eigen::VectorXd scale(A.cols());
  for (int cidx = 0; cidx < A.cols(); ++cidx)
    scale(cidx) = std::max(A.col(cidx).norm(), 1e-300);
  Eigen::MatrixXd An = A * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(An, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::VectorXd utb = svd.matrixU().transpose() * b;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(A.cols());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 0.0) utb(i) *= sv(i) / (sv(i) * sv(i) + problem.reg);
  y = svd.matrixV() * utb.head(sv.size());
  Eigen::VectorXd x = scale.cwiseInverse().asDiagonal() * y;

  SteeringResult result;
  result.coeffs.assign(x.data(), x.data() + x.size());

  // realized current and forward verification
  GridSpec g = problem.grid;
  int samples = int(std::llround(problem.T / problem.src_dt)) + 1;
  double dt = problem.T / (samples - 1);
  auto current_at = [&](double t, Vec2 pos) {
    Vec2 acc{0.0, 0.0};
    for (int e = 0; e < basis.elements(); ++e)
      for (int l = 0; l < basis.n_time; ++l) {
        double coeff = result.coeffs[size_t(e * basis.n_time + l)];
        if (coeff == 0.0) continue;
        double theta = std::sin((l + 1) * kPi * t / problem.T);
        acc += (coeff * theta) * element_current(basis, e, pos);
      }
    return acc;
  };

  std::vector<ScalarField> rhos(static_cast<size_t>(samples), ScalarField(g));
  std::vector<VectorField> js;
  for (int i = 0; i < samples; ++i) {
    double t = i * dt;
    js.push_back(VectorField::sample(g, [&](Vec2 pos) { return current_at(t, pos); }));
  }
  result.current = SourceMoments(0.0, dt, std::move(rhos), std::move(js));

  EvolveOptions opts;
  opts.enforce_checks = false;
  EMState s0{0.0, problem.E0, problem.B0, problem.c};
  result.trajectory = evolve_maxwell(s0, result.current, problem.T, opts);

  auto achieved =
      controlled_dofs(result.trajectory.E_hat.back(), result.trajectory.B_hat.back(),
                      problem.k_ctrl);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < achieved.size(); ++i) {
    num += (achieved[i] - reach.target[i]) * (achieved[i] - reach.target[i]);
    den += reach.target[i] * reach.target[i];
  }
  result.rel_residual = std::sqrt(num / std::max(den, 1e-30));

  // support and divergence diagnostics on analytic probes
  double leak = 0.0, divmax = 0.0, jmax = 0.0;
  int probe_n = 4 * g.n;
  for (int ia = 0; ia < probe_n; ++ia)
    for (int ib = 0; ib < probe_n; ++ib) {
      Vec2 pos{(ia + 0.37) / double(probe_n), (ib + 0.71) / double(probe_n)};
      Vec2 j = current_at(0.5 * problem.T, pos);
      double mag = std::max(std::abs(j.x), std::abs(j.y));
      jmax = std::max(jmax, mag);
      if (!omega.contains(pos)) leak = std::max(leak, mag);
    }
  for (const auto& bump : basis.bumps)
    for (int ir = 0; ir < 8; ++ir)
      for (int ia = 0; ia < 16; ++ia) {
        double r = bump.radius * (ir + 0.5) / 8.0;
        double ang = 2.0 * kPi * ia / 16.0;
        Vec2 pos = torus_wrap(bump.center + Vec2{r * std::cos(ang), r * std::sin(ang)});
        divmax = std::max(divmax, std::abs(bump_current_divergence(bump, pos)));
      }
  result.support_leak = leak;
  result.div_identity = divmax;
  result.max_current = jmax;
  return result;
}

}  // namespace vmt
