#pragma once

#include <optional>
#include <vector>

#include "vmtorus/grid.hpp"
#include "vmtorus/spectral.hpp"

namespace vmt {

/// Electromagnetic state at one time: E vector field, B scalar field (2D),
/// with the speed of light attached.
struct EMState {
  double t = 0.0;
  VectorField E;
  ScalarField B;
  double c = 1.0;

  void validate() const;  // c > 0, same grid, finite
};

/// Prescribed charge/current sources, sampled at uniform times
/// t_i = t0 + i*dt. Spectral tables are computed once on construction.
class SourceMoments {
 public:
  SourceMoments() = default;
  SourceMoments(double t0, double dt, std::vector<ScalarField> rho, std::vector<VectorField> j);

  /// All-zero source with `count` samples.
  static SourceMoments zero(GridSpec g, double t0, double dt, int count);

  int samples() const { return int(rho_hat_.size()); }
  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double time(int i) const { return t0_ + i * dt_; }
  const GridSpec& grid() const { return grid_; }

  const SpectralScalar& rho_hat(int i) const { return rho_hat_[i]; }
  const SpectralVector& j_hat(int i) const { return j_hat_[i]; }

 private:
  GridSpec grid_;
  double t0_ = 0.0, dt_ = 0.0;
  std::vector<SpectralScalar> rho_hat_;
  std::vector<SpectralVector> j_hat_;
};

struct CompatibilityReport {
  double max_residual = 0.0;  // max |div E - (rho - mean rho)| over nodes
  double tol = 0.0;
  bool pass = false;
};

/// Residual of div E = rho - mean(rho) for the given state.
CompatibilityReport check_compatibility(const EMState& state, const ScalarField& rho0,
                                        double tol = 1e-9);

/// Max over interior sample times and nodes of d_t rho + div j (centered
/// differences in t, spectral divergence in x). Throws if fewer than 2 samples.
double check_charge_conservation(const SourceMoments& src);

/// Max over sample times of |integral of j over the torus|.
double check_zero_mean_current(const SourceMoments& src);

struct EvolveOptions {
  double charge_tol = 1e-6;       // refuse sources violating local charge conservation
  double compat_tol = 1e-6;       // refuse incompatible initial data
  bool enforce_checks = true;     // particle pipelines relax this (see absorption)
  double max_panel_phase = 0.5;   // c*|xi|*h <= this per quadrature sub-panel
  double mode_skip_rel = 1e-14;   // skip Duhamel work for modes with negligible source
};

/// Spectral trajectory of the Maxwell system at the source sample times.
class MaxwellTrajectory {
 public:
  GridSpec grid;
  double c = 1.0;
  double t0 = 0.0, dt = 0.0;
  std::vector<SpectralVector> E_hat;
  std::vector<SpectralScalar> B_hat;

  int samples() const { return int(E_hat.size()); }
  double time(int i) const { return t0 + i * dt; }
  EMState state(int i) const;
  /// Sum over modes of |E_hat|^2 + |B_hat|^2 at sample i.
  double mode_energy(int i) const;
};

/// Evolves the 2D Maxwell system with prescribed sources from state0 over
/// [state0.t, state0.t + T]. Per mode k != 0 the homogeneous rotation
/// cos/sin(t c |xi_k|) is applied exactly; the Duhamel source integral uses
/// a product (Filon-type) rule: cubic interpolation of the source samples
/// integrated exactly against the rotation kernel, with sub-panels capped at
/// max_panel_phase radians of kernel phase. Mode 0 obeys dE0/dt = -j0,
/// dB0/dt = 0. The constraint div E = rho - mean(rho) is preserved by slaving
/// the longitudinal part to rho(t). T must align with the source sampling.
MaxwellTrajectory evolve_maxwell(const EMState& state0, const SourceMoments& src, double T,
                                 const EvolveOptions& opts = {});

/// Electrostatic field of rho: curl E = 0, div E = rho - mean(rho), mean(E)=0.
/// Per mode: E_hat = -i xi rho_hat / |xi|^2.
VectorField solve_poisson(const ScalarField& rho);
SpectralVector solve_poisson(const SpectralScalar& rho_hat);

/// Mean-zero solution of Laplace(theta) = h (spectral).
SpectralScalar solve_poisson_scalar(const SpectralScalar& h_hat);

/// Oscillating classical-limit remainder fields built from the initial data:
///   Bt^k(t) = -i (xi ^ E^k(0))/|xi| sin(t c|xi|) + B^k(0) cos(t c|xi|)
///   Et^k(t) =  i (xi2,-xi1) B^k(0)/|xi| sin(t c|xi|)
///              + [E^k(0) - Einf^k(0)] cos(t c|xi|)
/// with mode 0 identically zero. (xi ^ E := xi1 E2 - xi2 E1; the bracket in
/// the E formula is the transverse part of the initial electric field.)
class TildeFields {
 public:
  TildeFields(const VectorField& E0, const ScalarField& B0, const ScalarField& rho0, double c);

  SpectralVector E_hat(double t) const;
  SpectralScalar B_hat(double t) const;
  VectorField E(double t) const { return to_real(E_hat(t)); }
  ScalarField B(double t) const { return to_real(B_hat(t)); }
  double c() const { return c_; }

 private:
  GridSpec grid_;
  double c_;
  SpectralVector E0_hat_;
  SpectralScalar B0_hat_;
  SpectralVector Einf0_hat_;
};

/// Explicit series constants of the classical-limit error bounds:
///   |B - mean(B0) - Bt|                <= C_rho_j      (t+1)/c
///   |E - Einf - mean(E0) - Et|         <= C_prime_rho_j(t+1)/c
struct ApproxBound {
  double C_rho_j = 0.0;
  double C_prime_rho_j = 0.0;
};

/// Computes the series over k != 0 of
///   |d_tt rho^k|/|k|^2 + w (|d_t rho^k|/|k|^2 + |j^k|/|k|) + |d_t j^k|/|k|
/// (E constant) and |d_t j^k| + 2 w |j^k| (B constant), with sup norms in t by
/// finite differences over the samples. w = 1/c_min weights the terms that the
/// underlying estimate derives with an extra 1/c; the default c_min = 1 keeps
/// the conservative unweighted sum, valid at every c >= 1 and every t >= 0.
ApproxBound approx_constants(const SourceMoments& src, double c_min = 1.0);

struct ApproxSweepRow {
  double c = 0.0, t = 0.0;
  double errE = 0.0, errB = 0.0;
  double boundE = 0.0, boundB = 0.0;
};

struct ApproxSweepResult {
  std::vector<ApproxSweepRow> rows;
  std::vector<double> c_list;
  std::vector<double> supE, supB;      // sup over [0,T] per c
  double slopeE = 0.0, slopeB = 0.0;   // log-log fitted slope of sup error vs c
  ApproxBound bound;
  bool bound_ok = false;               // errE <= boundE at every sample
};

/// Runs evolve_maxwell for each c and measures the sup-norm distance to the
/// classical-limit representation E_inf + mean(E0) + Et (and mean(B0) + Bt).
/// Refuses sources that violate the zero-mean current condition.
ApproxSweepResult verify_approx_lemma(const EMState& state0, const SourceMoments& src,
                                      const std::vector<double>& c_list, double T,
                                      const EvolveOptions& opts = {});

}  // namespace vmt
