#pragma once

#include <memory>
#include <vector>

#include "vmtorus/characteristics.hpp"
#include "vmtorus/grid.hpp"

namespace vmt {

class MaxwellTrajectory;

/// Periodic Catmull-Rom bicubic interpolation of grid samples (C^1 fields,
/// as required for characteristic flows driven by gridded data).
class BicubicScalar {
 public:
  BicubicScalar() = default;
  explicit BicubicScalar(const ScalarField& f) : n_(f.grid.n), v_(f.values) {}
  double operator()(Vec2 x) const;

 private:
  int n_ = 0;
  std::vector<double> v_;
};

class BicubicVector {
 public:
  BicubicVector() = default;
  explicit BicubicVector(const VectorField& f);
  Vec2 operator()(Vec2 x) const { return {c1_(x), c2_(x)}; }

 private:
  BicubicScalar c1_, c2_;
};

/// Time-dependent electromagnetic field sampled at uniform frame times:
/// bicubic in space, linear in time; queries are clamped to the frame span.
/// Cheap to copy (frames are shared).
class FieldMovie {
 public:
  FieldMovie() = default;
  FieldMovie(double t0, double dt, const std::vector<VectorField>& E_frames,
             const std::vector<ScalarField>& B_frames);

  static FieldMovie from_trajectory(const MaxwellTrajectory& traj);

  Vec2 E(double t, Vec2 x) const;
  double B(double t, Vec2 x) const;
  double t0() const { return t0_; }
  double dt() const { return dt_; }
  int frames() const;

  /// Force field E + v_hat^perp * (B * b_scale); pass b_scale = 1/c for the
  /// self-consistent system.
  ForceSpec force(LightSpeed c, double b_scale = 1.0) const;

 private:
  double t0_ = 0.0, dt_ = 1.0;
  std::shared_ptr<const std::vector<BicubicVector>> E_;
  std::shared_ptr<const std::vector<BicubicScalar>> B_;
};

}  // namespace vmt
