#include "vmtorus/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace vmt {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is. Plans
// are created unaligned so they can run on any std::vector storage.
std::mutex g_plan_mutex;

struct PlanKey {
  int n;
  int sign;
  bool operator==(const PlanKey&) const = default;
};
struct PlanKeyHash {
  size_t operator()(const PlanKey& k) const { return std::hash<int>()(k.n * 4 + (k.sign > 0)); }
};

fftw_plan get_plan(int n, int sign, fftw_complex* in, fftw_complex* out) {
  static std::unordered_map<PlanKey, fftw_plan, PlanKeyHash> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto it = cache.find(PlanKey{n, sign});
  if (it != cache.end()) return it->second;
  fftw_plan p = fftw_plan_dft_2d(n, n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(PlanKey{n, sign}, p);
  return p;
}

void fft2(int n, std::vector<cplx>& data, int sign) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan p = get_plan(n, sign, ptr, ptr);
  fftw_execute_dft(p, ptr, ptr);
}

// Extract the centered coefficient table from a full n x n spectrum
// (forward FFTW = sum f(x) exp(-i 2pi k.x), so divide by n^2).
void extract(const std::vector<cplx>& full, SpectralScalar& out) {
  int n = out.grid.n, K = out.grid.k_max;
  double inv = 1.0 / (double(n) * n);
  for (int k1 = -K; k1 <= K; ++k1) {
    int a = (k1 + n) % n;
    for (int k2 = -K; k2 <= K; ++k2) {
      int b = (k2 + n) % n;
      out.at(k1, k2) = full[size_t(a) * n + b] * inv;
    }
  }
}

void embed(const SpectralScalar& s, std::vector<cplx>& full) {
  int n = s.grid.n, K = s.grid.k_max;
  std::fill(full.begin(), full.end(), cplx{});
  for (int k1 = -K; k1 <= K; ++k1) {
    int a = (k1 + n) % n;
    for (int k2 = -K; k2 <= K; ++k2) {
      int b = (k2 + n) % n;
      full[size_t(a) * n + b] = s.at(k1, k2);
    }
  }
}

}  // namespace

SpectralScalar to_spectral(const ScalarField& f) {
  f.grid.validate();
  f.check_finite("to_spectral");
  int n = f.grid.n;
  std::vector<cplx> buf(size_t(n) * n);
  for (size_t i = 0; i < buf.size(); ++i) buf[i] = f.values[i];
  fft2(n, buf, FFTW_FORWARD);
  SpectralScalar out(f.grid);
  extract(buf, out);
  hermitian_symmetrize(out);
  return out;
}

SpectralVector to_spectral(const VectorField& f) {
  f.grid.validate();
  f.check_finite("to_spectral");
  int n = f.grid.n;
  SpectralVector out(f.grid);
  std::vector<cplx> buf(size_t(n) * n);
  SpectralScalar tmp(f.grid);
  for (size_t i = 0; i < buf.size(); ++i) buf[i] = f.c1[i];
  fft2(n, buf, FFTW_FORWARD);
  extract(buf, tmp);
  hermitian_symmetrize(tmp);
  out.c1 = tmp.coeffs;
  for (size_t i = 0; i < buf.size(); ++i) buf[i] = f.c2[i];
  fft2(n, buf, FFTW_FORWARD);
  extract(buf, tmp);
  hermitian_symmetrize(tmp);
  out.c2 = tmp.coeffs;
  return out;
}

ScalarField to_real(const SpectralScalar& s) {
  int n = s.grid.n;
  std::vector<cplx> buf(size_t(n) * n);
  embed(s, buf);
  fft2(n, buf, FFTW_BACKWARD);
  ScalarField out(s.grid);
  for (size_t i = 0; i < buf.size(); ++i) out.values[i] = buf[i].real();
  return out;
}

VectorField to_real(const SpectralVector& s) {
  int n = s.grid.n;
  VectorField out(s.grid);
  std::vector<cplx> buf(size_t(n) * n);
  SpectralScalar tmp(s.grid);
  tmp.coeffs = s.c1;
  embed(tmp, buf);
  fft2(n, buf, FFTW_BACKWARD);
  for (size_t i = 0; i < buf.size(); ++i) out.c1[i] = buf[i].real();
  tmp.coeffs = s.c2;
  embed(tmp, buf);
  fft2(n, buf, FFTW_BACKWARD);
  for (size_t i = 0; i < buf.size(); ++i) out.c2[i] = buf[i].real();
  return out;
}

namespace {
void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw std::invalid_argument("spectral operation: grid mismatch");
}
}  // namespace

SpectralScalar divergence(const SpectralVector& E) {
  SpectralScalar out(E.grid);
  int K = E.grid.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      int i = out.idx(k1, k2);
      out.coeffs[i] = cplx(0, xi(k1)) * E.c1[i] + cplx(0, xi(k2)) * E.c2[i];
    }
  return out;
}

SpectralScalar curl_vec(const SpectralVector& E) {
  SpectralScalar out(E.grid);
  int K = E.grid.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      int i = out.idx(k1, k2);
      out.coeffs[i] = cplx(0, xi(k1)) * E.c2[i] - cplx(0, xi(k2)) * E.c1[i];
    }
  return out;
}

SpectralVector curl_scal(const SpectralScalar& b) {
  SpectralVector out(b.grid);
  int K = b.grid.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      int i = out.idx(k1, k2);
      out.c1[i] = cplx(0, xi(k2)) * b.coeffs[i];
      out.c2[i] = -cplx(0, xi(k1)) * b.coeffs[i];
    }
  return out;
}

SpectralVector gradient(const SpectralScalar& phi) {
  SpectralVector out(phi.grid);
  int K = phi.grid.k_max;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      int i = out.idx(k1, k2);
      out.c1[i] = cplx(0, xi(k1)) * phi.coeffs[i];
      out.c2[i] = cplx(0, xi(k2)) * phi.coeffs[i];
    }
  return out;
}

double mean(const SpectralScalar& s) { return s.at(0, 0).real(); }

Vec2 mean(const SpectralVector& s) {
  int i = s.idx(0, 0);
  return {s.c1[i].real(), s.c2[i].real()};
}

double power(const SpectralScalar& s) {
  double sum = 0.0;
  for (const cplx& c : s.coeffs) sum += std::norm(c);
  return sum;
}

double power(const SpectralVector& s) {
  double sum = 0.0;
  for (const cplx& c : s.c1) sum += std::norm(c);
  for (const cplx& c : s.c2) sum += std::norm(c);
  return sum;
}

double eval(const SpectralScalar& s, Vec2 x) {
  // Real field: sum k1>0 half-table twice via Hermitian symmetry.
  int K = s.grid.k_max;
  double acc = s.at(0, 0).real();
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
      cplx c = s.at(k1, k2);
      double ph = two_pi * (k1 * x.x + k2 * x.y);
      acc += 2.0 * (c.real() * std::cos(ph) - c.imag() * std::sin(ph));
    }
  return acc;
}

Vec2 eval(const SpectralVector& s, Vec2 x) {
  int K = s.grid.k_max;
  int i0 = s.idx(0, 0);
  double a1 = s.c1[i0].real(), a2 = s.c2[i0].real();
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
      int i = s.idx(k1, k2);
      double ph = two_pi * (k1 * x.x + k2 * x.y);
      double cs = std::cos(ph), sn = std::sin(ph);
      a1 += 2.0 * (s.c1[i].real() * cs - s.c1[i].imag() * sn);
      a2 += 2.0 * (s.c2[i].real() * cs - s.c2[i].imag() * sn);
    }
  return {a1, a2};
}

namespace {
void symmetrize_table(const GridSpec& g, std::vector<cplx>& c) {
  int K = g.k_max, m = g.modes_per_dim();
  auto idx = [&](int k1, int k2) { return (k1 + K) * m + (k2 + K); };
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 < 0 || (k1 == 0 && k2 < 0)) continue;
      cplx a = c[idx(k1, k2)];
      cplx b = std::conj(c[idx(-k1, -k2)]);
      cplx avg = 0.5 * (a + b);
      c[idx(k1, k2)] = avg;
      c[idx(-k1, -k2)] = std::conj(avg);
    }
  c[idx(0, 0)] = cplx(c[idx(0, 0)].real(), 0.0);
}
}  // namespace

void hermitian_symmetrize(SpectralScalar& s) { symmetrize_table(s.grid, s.coeffs); }

void hermitian_symmetrize(SpectralVector& s) {
  symmetrize_table(s.grid, s.c1);
  symmetrize_table(s.grid, s.c2);
}

double hermitian_defect(const SpectralScalar& s) {
  int K = s.grid.k_max;
  double d = 0.0;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2)
      d = std::max(d, std::abs(s.at(k1, k2) - std::conj(s.at(-k1, -k2))));
  return d;
}

}  // namespace vmt
