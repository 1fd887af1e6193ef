#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "vmtorus/geometry.hpp"

using namespace vmt;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Brute-force oracle: does some line with direction (a, b) miss B(center, r)?
// Sweeps perpendicular offsets of the family and marches each line.
bool offset_sweep_misses(int a, int b, Vec2 center, double r) {
  double un = std::hypot(double(a), double(b));
  Vec2 e{a / un, b / un};
  Vec2 n{-b / un, a / un};
  double spacing = 1.0 / un;
  int n_off = 400, n_t = 4000;
  double line_len = 2.0 * un;  // closed geodesic length, doubled for safety
  for (int io = 0; io < n_off; ++io) {
    double off = spacing * (io + 0.5) / n_off;
    Vec2 base = center + off * n;
    double closest = 1.0;
    for (int it = 0; it < n_t; ++it) {
      double t = line_len * it / n_t;
      closest = std::min(closest, torus_dist(torus_wrap(base + t * e), center));
    }
    if (closest > r) return true;  // this offset's line misses the ball
  }
  return false;
}

ControlSet full_torus() { return ControlSet::ball_union({Ball{{0.5, 0.5}, 0.8}}); }

}  // namespace

TEST_CASE("strip membership and band coordinates") {
  StripSpec s{1, 0, 0.0, 0.1};  // lines along e1, normal (0, 1), band around x2 = 0
  s.validate();
  CHECK(s.spacing() == doctest::Approx(1.0));
  CHECK(s.contains({0.3, 0.05}));
  CHECK(s.contains({0.9, 0.95}));  // wraps
  CHECK(!s.contains({0.3, 0.5}));
  StripSpec diag{1, 2, 0.0, 0.05};
  diag.validate();
  CHECK(diag.spacing() == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK_THROWS(StripSpec{2, 4, 0.0, 0.05}.validate());  // not coprime
  CHECK_THROWS(StripSpec{1, 0, 0.0, 0.6}.validate());   // wider than spacing/2
}

TEST_CASE("check_gcc certifies the full torus with L = 0") {
  auto rep = check_gcc(full_torus());
  CHECK(rep.holds);
  CHECK(rep.L == 0.0);
  CHECK(!rep.witness.has_value());
}

TEST_CASE("check_gcc refutes a strip with a parallel-direction witness") {
  auto omega = ControlSet::strip(StripSpec{1, 0, 0.0, 0.1});
  GccOptions opts;
  opts.L_max = 8.0;
  auto rep = check_gcc(omega, opts);
  REQUIRE(!rep.holds);
  REQUIRE(rep.witness.has_value());
  // witness direction is parallel to the strip and its start lies outside
  CHECK(std::abs(std::sin(rep.witness->angle)) < 1e-9);
  CHECK(std::abs(StripSpec{1, 0, 0.0, 0.1}.signed_dist(rep.witness->x)) > 0.1);
}

TEST_CASE("check_gcc on a single ball agrees with the bad-direction census") {
  Ball ball{{0.5, 0.5}, 0.3};
  // A single ball of radius < 1/2 has bad directions, so GCC must fail.
  REQUIRE(!enumerate_bad_directions(ball).empty());
  GccOptions opts;
  opts.L_max = 10.0;
  auto rep = check_gcc(ControlSet::ball_union({ball}), opts);
  CHECK(!rep.holds);
  REQUIRE(rep.witness.has_value());
  // the witness direction must be close to one of the enumerated bad ones
  double best = 10.0;
  for (auto [a, b] : enumerate_bad_directions(ball)) {
    double ang = std::atan2(double(b), double(a));
    best = std::min(best, std::abs(std::remainder(rep.witness->angle - ang, kTwoPi)));
  }
  CHECK(best < 0.05);
}

TEST_CASE("check_gcc enforces the resolution preconditions") {
  GccOptions opts;
  opts.n_dirs = 32;
  CHECK_THROWS(check_gcc(full_torus(), opts));
  opts.n_dirs = 128;
  opts.n_starts = 100;
  CHECK_THROWS(check_gcc(full_torus(), opts));
}

TEST_CASE("bad directions for r = 0.3 are exactly the 8 axis/diagonal ones") {
  auto dirs = enumerate_bad_directions(Ball{{0.2, 0.7}, 0.3});
  std::set<std::pair<int, int>> got(dirs.begin(), dirs.end());
  std::set<std::pair<int, int>> expect = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                          {1, 1},  {-1, -1}, {1, -1}, {-1, 1}};
  CHECK(got == expect);
}

TEST_CASE("bad directions: r >= 1/2 gives the empty list") {
  CHECK(enumerate_bad_directions(Ball{{0.5, 0.5}, 0.5}).empty());
  CHECK(enumerate_bad_directions(Ball{{0.5, 0.5}, 0.73}).empty());
}

TEST_CASE("bad directions match the offset-sweep oracle") {
  // r = 0.21: candidate bound 1/(4 r^2) ~ 5.67, so crank through |a|,|b| <= 3
  Ball ball{{0.37, 0.58}, 0.21};
  auto dirs = enumerate_bad_directions(ball);
  std::set<std::pair<int, int>> got(dirs.begin(), dirs.end());
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) {
      if ((a == 0 && b == 0) || std::gcd(std::abs(a), std::abs(b)) != 1) continue;
      bool oracle = offset_sweep_misses(a, b, ball.center, ball.radius);
      CHECK(got.count({a, b}) == (oracle ? 1u : 0u));
    }
}

TEST_CASE("bad-direction set is closed under negation and quarter turns") {
  auto dirs = enumerate_bad_directions(Ball{{0.5, 0.5}, 0.08});
  std::set<std::pair<int, int>> got(dirs.begin(), dirs.end());
  CHECK(!got.empty());
  for (auto [a, b] : got) {
    CHECK(got.count({-a, -b}) == 1);
    CHECK(got.count({-b, a}) == 1);
  }
}

TEST_CASE("bending gamma formula arithmetic") {
  // D = 1, d = 0.5, b_lower = 2, b_tilde = -0.3 -> gamma = 0.2
  double gamma = 1.0 * (-0.3) + 0.5 * 0.5 * 2.0;
  CHECK(gamma == doctest::Approx(0.2));
}

TEST_CASE("certify_bending of the constant field") {
  GridSpec g{32, 15};
  auto b = ScalarField::sample(g, [](Vec2) { return 1.0; });
  auto cert = certify_bending(b, 0.5);
  REQUIRE(cert.valid);
  CHECK(cert.sign == 1);
  CHECK(cert.k_gcc.L == 0.0);  // K = T^2
  CHECK(cert.D == 0.0);
  CHECK(cert.d == doctest::Approx(0.25));  // the cap
  CHECK(cert.b_lower == doctest::Approx(1.0));
  CHECK(cert.b_tilde == doctest::Approx(1.0));
  CHECK(cert.gamma == doctest::Approx(0.5 * cert.d * cert.b_lower));
}

TEST_CASE("certify_bending accepts strictly positive non-constant fields") {
  GridSpec g{32, 15};
  auto b = ScalarField::sample(g, [](Vec2 x) { return 1.5 + std::sin(kTwoPi * x.x); });
  auto cert = certify_bending(b, 0.4);
  REQUIRE(cert.valid);
  CHECK(cert.D == 0.0);  // K = T^2 at this threshold
  CHECK(cert.b_lower == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(cert.gamma > 0.0);
}

TEST_CASE("certify_bending rejects sin(2 pi x1): its positive set misses GCC") {
  GridSpec g{32, 15};
  auto b = ScalarField::sample(g, [](Vec2 x) { return std::sin(kTwoPi * x.x); });
  auto cert = certify_bending(b, 0.1);
  CHECK(!cert.valid);
  CHECK(cert.diagnostic.find("geometric condition") != std::string::npos);
}

TEST_CASE("certify_bending of -b mirrors the sign") {
  GridSpec g{32, 15};
  auto b = ScalarField::sample(g, [](Vec2) { return -2.0; });
  auto cert = certify_bending(b, 0.5);
  REQUIRE(cert.valid);
  CHECK(cert.sign == -1);
  CHECK(cert.b_lower == doctest::Approx(2.0));
}

TEST_CASE("derive_bending_params: constant field, ball radius 0.1") {
  GridSpec g{32, 15};
  auto cert = certify_bending(ScalarField::sample(g, [](Vec2) { return 1.0; }), 0.5);
  REQUIRE(cert.valid);
  Ball ball{{0.5, 0.5}, 0.1};
  auto params = derive_bending_params(cert, ball, 0.0);
  REQUIRE_MESSAGE(params.feasible, params.binding);
  // direct substitution of the published inequalities
  double S = std::sqrt(1.0 / (params.m * params.m) + 1.0 / (params.c0 * params.c0));
  CHECK(params.L * S < params.tau);                                    // flight-time
  CHECK(0.5 * params.L * params.L * S < ball.radius / 8.0);            // deviation budget
  double K = std::sqrt(1.0 + params.M_bar * params.M_bar / (params.c0 * params.c0));
  CHECK(params.beta <
        params.tau * cert.gamma / (2.0 * K * (cert.D + 0.5 * cert.d)));  // rotation escape
  CHECK(params.T == doctest::Approx(4.0 * (params.T_m + params.tau)));
  CHECK(params.N_bad > 0);
  CHECK(params.M_bar > params.m);
}

TEST_CASE("derive_bending_params: vanishing gamma forces beta to the floor") {
  MagneticCertificate cert;
  cert.valid = true;
  cert.d = 0.25;
  cert.D = 0.5;
  cert.b_lower = 1.0;
  cert.b_tilde = -1.0;
  cert.b_max = 1.0;
  cert.gamma = 1e-12;
  auto params = derive_bending_params(cert, Ball{{0.5, 0.5}, 0.1}, 0.0);
  CHECK(!params.feasible);
  CHECK(params.binding.find("beta below floor") != std::string::npos);
}

TEST_CASE("derive_bending_params: doubling M_bar never decreases T") {
  GridSpec g{32, 15};
  auto cert = certify_bending(ScalarField::sample(g, [](Vec2) { return 1.0; }), 0.5);
  Ball ball{{0.5, 0.5}, 0.15};
  auto p0 = derive_bending_params(cert, ball, 0.0);
  REQUIRE(p0.feasible);
  auto p1 = derive_bending_params(cert, ball, 2.0 * p0.M_bar);
  auto p2 = derive_bending_params(cert, ball, 4.0 * p0.M_bar);
  REQUIRE(p1.feasible);
  REQUIRE(p2.feasible);
  CHECK(p1.T <= p2.T + 1e-12);
}

TEST_CASE("bending census: constant field hits the ball from a coarse grid") {
  GridSpec g{32, 15};
  auto cert = certify_bending(ScalarField::sample(g, [](Vec2) { return 1.0; }), 0.5);
  Ball ball{{0.5, 0.5}, 0.3};
  auto params = derive_bending_params(cert, ball, 0.0);
  REQUIRE_MESSAGE(params.feasible, params.binding);
  CensusOptions copts;
  copts.nx = 4;
  copts.ny = 4;
  copts.n_dirs = 8;
  copts.n_speeds = 2;
  copts.record_samples = false;
  auto census = verify_bending_lemma(
      params, ball, [](Vec2) { return 1.0; }, nullptr, 0.0, 10.0 * params.c0, copts);
  CHECK(census.hit_fraction == 1.0);
  CHECK(census.band_fraction == 1.0);
}

TEST_CASE("bending census: without bending, bad directions miss") {
  // b = 0: free transport; a sample aimed along a bad direction never hits.
  BendingParams params;
  params.feasible = true;
  params.m = 20.0;
  params.M_bar = 30.0;
  params.c0 = 10.0;
  params.tau = 0.05;
  params.T_m = 0.05;
  params.T = 1.0;
  Ball ball{{0.5, 0.5}, 0.2};
  CensusOptions copts;
  copts.nx = 4;
  copts.ny = 4;
  copts.n_dirs = 4;  // angles (i+1/2) pi/2: exact diagonals, bad for this ball
  copts.n_speeds = 2;
  copts.record_samples = false;
  auto census = verify_bending_lemma(
      params, ball, [](Vec2) { return 0.0; }, nullptr, 0.0, 20.0, copts);
  CHECK(census.hit_fraction < 1.0);
}
