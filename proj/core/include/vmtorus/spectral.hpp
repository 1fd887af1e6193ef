#pragma once

#include <complex>
#include <vector>

#include "vmtorus/grid.hpp"

namespace vmt {

using cplx = std::complex<double>;

/// Angular wavenumber of integer mode k: xi_k = 2*pi*k. All differential
/// operators below multiply mode k by i*xi_k (basis e_k(x) = exp(i 2pi k.x)).
inline double xi(int k) { return 6.283185307179586476925286766559 * k; }

/// Truncated Fourier coefficients of a real scalar field. Storage is a dense
/// (2k_max+1)^2 table indexed by k in [-k_max, k_max]^2; Hermitian symmetry
/// coeff(-k) = conj(coeff(k)) is maintained by construction.
struct SpectralScalar {
  GridSpec grid;
  std::vector<cplx> coeffs;

  SpectralScalar() = default;
  explicit SpectralScalar(GridSpec g) : grid(g), coeffs(g.modes(), cplx{}) {}

  int idx(int k1, int k2) const {
    int m = grid.modes_per_dim();
    return (k1 + grid.k_max) * m + (k2 + grid.k_max);
  }
  cplx& at(int k1, int k2) { return coeffs[idx(k1, k2)]; }
  cplx at(int k1, int k2) const { return coeffs[idx(k1, k2)]; }
};

/// Truncated Fourier coefficients of a real vector field (two components).
struct SpectralVector {
  GridSpec grid;
  std::vector<cplx> c1, c2;

  SpectralVector() = default;
  explicit SpectralVector(GridSpec g) : grid(g), c1(g.modes(), cplx{}), c2(g.modes(), cplx{}) {}

  int idx(int k1, int k2) const {
    int m = grid.modes_per_dim();
    return (k1 + grid.k_max) * m + (k2 + grid.k_max);
  }
};

// Real <-> spectral transforms. to_real(to_spectral(f)) is the identity on
// band-limited fields; truncation is sharp at |k|_inf <= k_max.
SpectralScalar to_spectral(const ScalarField& f);
SpectralVector to_spectral(const VectorField& f);
ScalarField to_real(const SpectralScalar& s);
VectorField to_real(const SpectralVector& s);

// Differential operators, exact on the coefficient tables.
SpectralScalar divergence(const SpectralVector& E);
SpectralScalar curl_vec(const SpectralVector& E);   // d1 E2 - d2 E1
SpectralVector curl_scal(const SpectralScalar& b);  // (d2 b, -d1 b)
SpectralVector gradient(const SpectralScalar& phi);
double mean(const SpectralScalar& s);
Vec2 mean(const SpectralVector& s);

/// Sum of |coeff|^2 (all modes). Equals the grid-averaged L2 norm of the real
/// field for band-limited inputs (Parseval).
double power(const SpectralScalar& s);
double power(const SpectralVector& s);

/// Pointwise evaluation by direct mode summation (real part).
double eval(const SpectralScalar& s, Vec2 x);
Vec2 eval(const SpectralVector& s, Vec2 x);

/// Enforce coeff(-k) = conj(coeff(k)) exactly (averages the pair).
void hermitian_symmetrize(SpectralScalar& s);
void hermitian_symmetrize(SpectralVector& s);
/// Max |coeff(-k) - conj(coeff(k))| over the table.
double hermitian_defect(const SpectralScalar& s);

}  // namespace vmt
