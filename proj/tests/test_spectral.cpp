#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vmtorus/grid.hpp"
#include "vmtorus/rng.hpp"
#include "vmtorus/spectral.hpp"

using namespace vmt;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Random band-limited real field with |k|_inf <= band (test generator).
ScalarField random_band_limited(GridSpec g, int band, Rng& rng) {
  SpectralScalar s(g);
  for (int k1 = -band; k1 <= band; ++k1)
    for (int k2 = -band; k2 <= band; ++k2) {
      if (k1 < 0 || (k1 == 0 && k2 < 0)) continue;
      cplx c{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      if (k1 == 0 && k2 == 0) c = cplx(c.real(), 0.0);
      s.at(k1, k2) = c;
      s.at(-k1, -k2) = std::conj(c);
    }
  return to_real(s);
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS(GridSpec{7, 2}.validate());
  CHECK_THROWS(GridSpec{12, 2}.validate());   // not a power of two
  CHECK_THROWS(GridSpec{16, 0}.validate());
  CHECK_THROWS(GridSpec{16, 8}.validate());   // k_max > n/2 - 1
  CHECK_NOTHROW(GridSpec{16, 7}.validate());
}

TEST_CASE("constant field transforms to pure mode zero") {
  GridSpec g{16, 7};
  auto f = ScalarField::sample(g, [](Vec2) { return 1.0; });
  auto s = to_spectral(f);
  CHECK(std::abs(s.at(0, 0) - cplx(1.0, 0.0)) < 1e-14);
  for (int k1 = -7; k1 <= 7; ++k1)
    for (int k2 = -7; k2 <= 7; ++k2)
      if (k1 != 0 || k2 != 0) CHECK(std::abs(s.at(k1, k2)) < 1e-14);
}

TEST_CASE("cos(2 pi x1) lands on the (+-1, 0) pair") {
  GridSpec g{32, 15};
  auto f = ScalarField::sample(g, [](Vec2 x) { return std::cos(kTwoPi * x.x); });
  auto s = to_spectral(f);
  CHECK(std::abs(s.at(1, 0) - cplx(0.5, 0.0)) < 1e-13);
  CHECK(std::abs(s.at(-1, 0) - cplx(0.5, 0.0)) < 1e-13);
  CHECK(std::abs(s.at(0, 1)) < 1e-14);
  CHECK(std::abs(s.at(2, 3)) < 1e-14);
}

TEST_CASE("round trip on random band-limited fields") {
  GridSpec g{64, 31};
  Rng rng(20240817);
  for (int rep = 0; rep < 3; ++rep) {
    auto f = random_band_limited(g, 31, rng);
    auto back = to_real(to_spectral(f));
    double err = 0;
    for (size_t i = 0; i < f.values.size(); ++i)
      err = std::max(err, std::abs(f.values[i] - back.values[i]));
    CHECK(err < 1e-12);
  }
}

TEST_CASE("hermitian symmetry holds for transforms of real data") {
  GridSpec g{32, 10};
  Rng rng(7);
  auto f = random_band_limited(g, 10, rng);
  auto s = to_spectral(f);
  CHECK(hermitian_defect(s) == 0.0);  // symmetrized exactly
}

TEST_CASE("gradient of constant vanishes") {
  GridSpec g{16, 7};
  auto s = to_spectral(ScalarField::sample(g, [](Vec2) { return 3.25; }));
  auto grad = gradient(s);
  CHECK(max_abs(to_real(grad)) < 1e-13);
}

TEST_CASE("curl_vec of gradient is zero in exact coefficients") {
  GridSpec g{32, 15};
  Rng rng(99);
  auto phi = to_spectral(random_band_limited(g, 15, rng));
  auto cv = curl_vec(gradient(phi));
  double worst = 0;
  for (auto& c : cv.coeffs) worst = std::max(worst, std::abs(c));
  CHECK(worst < 1e-12);
}

TEST_CASE("divergence of curl_scal is zero in exact coefficients") {
  GridSpec g{32, 15};
  Rng rng(13);
  auto b = to_spectral(random_band_limited(g, 15, rng));
  auto dv = divergence(curl_scal(b));
  double worst = 0;
  for (auto& c : dv.coeffs) worst = std::max(worst, std::abs(c));
  // cancellation is exact in the algebra; allow roundoff on the xi^2 scale
  CHECK(worst < 1e-14 * xi(g.k_max) * xi(g.k_max));
}

TEST_CASE("single-mode divergence matches analytic value") {
  // E = (sin(2 pi x1)/(2 pi), 0) has div E = cos(2 pi x1).
  GridSpec g{32, 15};
  auto E = VectorField::sample(g, [](Vec2 x) { return Vec2{std::sin(kTwoPi * x.x) / kTwoPi, 0.0}; });
  auto dv = to_real(divergence(to_spectral(E)));
  auto expect = ScalarField::sample(g, [](Vec2 x) { return std::cos(kTwoPi * x.x); });
  double err = 0;
  for (size_t i = 0; i < dv.values.size(); ++i)
    err = std::max(err, std::abs(dv.values[i] - expect.values[i]));
  CHECK(err < 1e-12);
}

TEST_CASE("curl_scal convention is (d2 b, -d1 b)") {
  GridSpec g{32, 15};
  auto b = ScalarField::sample(g, [](Vec2 x) { return std::sin(kTwoPi * x.y); });
  auto curl = to_real(curl_scal(to_spectral(b)));
  // d2 b = 2 pi cos(2 pi x2), -d1 b = 0
  for (int a = 0; a < g.n; a += 5)
    for (int bb = 0; bb < g.n; bb += 3) {
      Vec2 x{double(a) / g.n, double(bb) / g.n};
      CHECK(curl.at(a, bb).x == doctest::Approx(kTwoPi * std::cos(kTwoPi * x.y)).epsilon(1e-10));
      CHECK(std::abs(curl.at(a, bb).y) < 1e-12);
    }
}

TEST_CASE("Parseval: grid-averaged L2 equals coefficient power") {
  GridSpec g{64, 20};
  Rng rng(2718);
  auto f = random_band_limited(g, 20, rng);
  double l2 = 0;
  for (double v : f.values) l2 += v * v;
  l2 /= double(f.values.size());
  double p = power(to_spectral(f));
  CHECK(std::abs(l2 - p) / p < 1e-12);
}

TEST_CASE("pointwise eval matches grid samples") {
  GridSpec g{32, 9};
  Rng rng(5);
  auto f = random_band_limited(g, 9, rng);
  auto s = to_spectral(f);
  for (int a = 0; a < g.n; a += 7)
    for (int b = 0; b < g.n; b += 5)
      CHECK(eval(s, f.node(a, b)) == doctest::Approx(f.at(a, b)).epsilon(1e-11));
}

TEST_CASE("field dump round trip is exact") {
  GridSpec g{16, 5};
  Rng rng(42);
  auto f = random_band_limited(g, 5, rng);
  std::string path = "test_dump.tkf";
  write_field_dump(path, f);
  auto back = read_scalar_dump(path, g.k_max);
  REQUIRE(back.grid.n == g.n);
  for (size_t i = 0; i < f.values.size(); ++i) CHECK(back.values[i] == f.values[i]);
  std::remove(path.c_str());
}

TEST_CASE("non-finite samples are rejected") {
  GridSpec g{16, 5};
  ScalarField f(g);
  f.values[3] = std::nan("");
  CHECK_THROWS(to_spectral(f));
}
