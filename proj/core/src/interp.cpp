#include "vmtorus/interp.hpp"

#include <cmath>
#include <stdexcept>

#include "vmtorus/maxwell.hpp"

namespace vmt {

namespace {
// Catmull-Rom weights for fractional coordinate u in [0,1).
inline void cr_weights(double u, double w[4]) {
  double u2 = u * u, u3 = u2 * u;
  w[0] = 0.5 * (-u3 + 2.0 * u2 - u);
  w[1] = 0.5 * (3.0 * u3 - 5.0 * u2 + 2.0);
  w[2] = 0.5 * (-3.0 * u3 + 4.0 * u2 + u);
  w[3] = 0.5 * (u3 - u2);
}
}  // namespace

double BicubicScalar::operator()(Vec2 x) const {
  Vec2 p = torus_wrap(x);
  double fa = p.x * n_, fb = p.y * n_;
  int a0 = int(std::floor(fa)), b0 = int(std::floor(fb));
  double ua = fa - a0, ub = fb - b0;
  double wa[4], wb[4];
  cr_weights(ua, wa);
  cr_weights(ub, wb);
  double acc = 0.0;
  for (int i = -1; i <= 2; ++i) {
    int a = (a0 + i) % n_;
    if (a < 0) a += n_;
    double row = 0.0;
    const double* base = v_.data() + size_t(a) * n_;
    for (int j = -1; j <= 2; ++j) {
      int b = (b0 + j) % n_;
      if (b < 0) b += n_;
      row += wb[j + 1] * base[b];
    }
    acc += wa[i + 1] * row;
  }
  return acc;
}

BicubicVector::BicubicVector(const VectorField& f) {
  ScalarField a(f.grid), b(f.grid);
  a.values = f.c1;
  b.values = f.c2;
  c1_ = BicubicScalar(a);
  c2_ = BicubicScalar(b);
}

FieldMovie::FieldMovie(double t0, double dt, const std::vector<VectorField>& E_frames,
                       const std::vector<ScalarField>& B_frames)
    : t0_(t0), dt_(dt) {
  if (E_frames.empty() || E_frames.size() != B_frames.size())
    throw std::invalid_argument("FieldMovie: inconsistent frame counts");
  if (E_frames.size() > 1 && !(dt > 0.0))
    throw std::invalid_argument("FieldMovie: dt must be positive");
  auto E = std::make_shared<std::vector<BicubicVector>>();
  auto B = std::make_shared<std::vector<BicubicScalar>>();
  E->reserve(E_frames.size());
  B->reserve(B_frames.size());
  for (const auto& f : E_frames) E->emplace_back(f);
  for (const auto& f : B_frames) B->emplace_back(f);
  E_ = std::move(E);
  B_ = std::move(B);
}

FieldMovie FieldMovie::from_trajectory(const MaxwellTrajectory& traj) {
  std::vector<VectorField> E;
  std::vector<ScalarField> B;
  E.reserve(size_t(traj.samples()));
  B.reserve(size_t(traj.samples()));
  for (int i = 0; i < traj.samples(); ++i) {
    E.push_back(to_real(traj.E_hat[size_t(i)]));
    B.push_back(to_real(traj.B_hat[size_t(i)]));
  }
  return FieldMovie(traj.t0, traj.dt, E, B);
}

int FieldMovie::frames() const { return E_ ? int(E_->size()) : 0; }

namespace {
inline void frame_blend(double t, double t0, double dt, int count, int& i0, double& u) {
  if (count == 1) {
    i0 = 0;
    u = 0.0;
    return;
  }
  double s = (t - t0) / dt;
  if (s <= 0.0) {
    i0 = 0;
    u = 0.0;
    return;
  }
  if (s >= count - 1) {
    i0 = count - 2;
    u = 1.0;
    return;
  }
  i0 = int(std::floor(s));
  u = s - i0;
}
}  // namespace

Vec2 FieldMovie::E(double t, Vec2 x) const {
  int i0;
  double u;
  frame_blend(t, t0_, dt_, frames(), i0, u);
  Vec2 a = (*E_)[size_t(i0)](x);
  if (u == 0.0) return a;
  Vec2 b = (*E_)[size_t(i0) + 1](x);
  return (1.0 - u) * a + u * b;
}

double FieldMovie::B(double t, Vec2 x) const {
  int i0;
  double u;
  frame_blend(t, t0_, dt_, frames(), i0, u);
  double a = (*B_)[size_t(i0)](x);
  if (u == 0.0) return a;
  double b = (*B_)[size_t(i0) + 1](x);
  return (1.0 - u) * a + u * b;
}

ForceSpec FieldMovie::force(LightSpeed c, double b_scale) const {
  ForceSpec f;
  FieldMovie self = *this;
  f.E = [self](double t, Vec2 x) { return self.E(t, x); };
  f.b = [self, b_scale](double t, Vec2 x) { return b_scale * self.B(t, x); };
  f.c = c;
  return f;
}

}  // namespace vmt
