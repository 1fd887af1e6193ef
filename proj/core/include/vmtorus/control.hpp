#pragma once

#include <string>
#include <vector>

#include "vmtorus/geometry.hpp"
#include "vmtorus/maxwell.hpp"

namespace vmt {

/// Stream-function bump on a ball: psi(x) = amp * p(1 - |x-c|^2/r^2) with the
/// quintic smoothstep p; the current element grad-perp(psi) is divergence-free
/// by construction and supported exactly inside the ball.
struct PsiBump {
  Vec2 center;
  double radius = 0.1;
  double amp = 1.0;
};

/// Divergence-free carrier of mean current inside an axis-aligned band:
/// axis 0 gives j = (chi(x2), 0) supported in |x2 - center| < half_width,
/// axis 1 gives j = (0, chi(x1)). Carries a nonzero torus-average current,
/// which the stream bumps cannot (their mean vanishes identically).
struct StripCarrier {
  int axis = 0;
  double center = 0.5;
  double half_width = 0.1;
  double amp = 1.0;
};

struct ControlBasis {
  std::vector<PsiBump> bumps;
  std::vector<StripCarrier> carriers;
  int n_time = 4;  // time profiles sin(l pi t / T), l = 1..n_time

  int elements() const { return int(bumps.size() + carriers.size()); }
  int columns() const { return elements() * n_time; }
};

/// Pointwise (analytic) current field of one basis element.
Vec2 bump_current(const PsiBump& b, Vec2 x);
Vec2 carrier_current(const StripCarrier& s, Vec2 x);

/// Analytic divergence of a basis element at x (mixed partials subtracted;
/// identically zero up to roundoff).
double bump_current_divergence(const PsiBump& b, Vec2 x);

struct SteeringProblem {
  GridSpec grid;
  double c = 1.0;
  double T = 4.0;
  int k_ctrl = 2;     // controlled modes |k|_inf <= k_ctrl
  double reg = 1e-8;  // Tikhonov weight
  double src_dt = 0.01;
  VectorField E0, E1;
  ScalarField B0, B1;

  void validate() const;  // div E0 = div E1 = 0 to tolerance, T > 0
};

struct Reachability {
  int rows = 0, cols = 0;
  std::vector<double> matrix;      // row-major, cols = basis columns
  std::vector<double> free_final;  // final dofs of the source-free evolution
  std::vector<double> target;      // dofs of (E1, B1)
};

/// Real dof packing of the controlled modes (all k with |k|_inf <= k_ctrl):
/// per mode re/im of E1, E2, B.
std::vector<double> controlled_dofs(const SpectralVector& E, const SpectralScalar& B, int k_ctrl);

/// Columns are final-state contributions at time T of unit coefficient on
/// each (element, time-profile) pair, computed by forward simulation from
/// zero initial data. Throws if a basis element leaks outside omega.
Reachability assemble_reachability(const SteeringProblem& problem, const ControlBasis& basis,
                                   const ControlSet& omega);

struct SteeringResult {
  std::vector<double> coeffs;
  double rel_residual = 0.0;    // achieved-vs-requested on controlled dofs
  double support_leak = 0.0;    // max |j| outside omega (analytic probes)
  double div_identity = 0.0;    // max |analytic divergence| over probes
  double max_current = 0.0;
  SourceMoments current;        // the realized control current, sampled
  MaxwellTrajectory trajectory; // forward run with the returned current
};

/// Ridge-regularized least squares on the controlled modes; the returned
/// current is verified by forward simulation. Requires mean(B1) = mean(B0)
/// (the B mean is unreachable: dB0/dt = 0).
SteeringResult solve_steering(const SteeringProblem& problem, const ControlBasis& basis,
                              const ControlSet& omega);

}  // namespace vmt
