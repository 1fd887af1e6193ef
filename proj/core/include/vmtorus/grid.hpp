#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace vmt {

/// Small 2D vector used for positions, velocities and field values.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2 perp() const { return {y, -x}; }  // v^perp = (v2, -v1)
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 v);

/// Wrap a point to the fundamental domain [0,1)^2 of the unit torus.
Vec2 torus_wrap(Vec2 x);
/// Shortest representative of a - b on the torus (components in [-1/2, 1/2)).
Vec2 torus_delta(Vec2 a, Vec2 b);
/// Torus distance.
double torus_dist(Vec2 a, Vec2 b);

/// Uniform n x n sampling of the unit torus with spectral truncation k_max.
/// Nodes are x_ab = (a/n, b/n). The torus side length is exactly 1.
struct GridSpec {
  int n = 64;      // points per dimension, power of two, >= 8
  int k_max = 31;  // modes kept: |k|_inf <= k_max <= n/2 - 1

  void validate() const;  // throws std::invalid_argument on violation
  int nodes() const { return n * n; }
  int modes_per_dim() const { return 2 * k_max + 1; }
  int modes() const { return modes_per_dim() * modes_per_dim(); }
  bool operator==(const GridSpec&) const = default;
};

/// Real scalar samples at grid nodes, row-major: index = a*n + b for (a/n, b/n).
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridSpec g) : grid(g), values(g.nodes(), 0.0) {}

  double& at(int a, int b) { return values[size_t(a) * grid.n + b]; }
  double at(int a, int b) const { return values[size_t(a) * grid.n + b]; }
  Vec2 node(int a, int b) const { return {double(a) / grid.n, double(b) / grid.n}; }

  static ScalarField sample(GridSpec g, const std::function<double(Vec2)>& f);
  void check_finite(const char* what) const;
};

/// Real vector samples at grid nodes (two component planes).
struct VectorField {
  GridSpec grid;
  std::vector<double> c1, c2;

  VectorField() = default;
  explicit VectorField(GridSpec g) : grid(g), c1(g.nodes(), 0.0), c2(g.nodes(), 0.0) {}

  Vec2 at(int a, int b) const {
    size_t i = size_t(a) * grid.n + b;
    return {c1[i], c2[i]};
  }
  void set(int a, int b, Vec2 v) {
    size_t i = size_t(a) * grid.n + b;
    c1[i] = v.x;
    c2[i] = v.y;
  }

  static VectorField sample(GridSpec g, const std::function<Vec2(Vec2)>& f);
  void check_finite(const char* what) const;
};

double max_abs(const ScalarField& f);
double max_abs(const VectorField& f);
/// Grid average (trapezoid on the torus = plain mean of samples).
double grid_mean(const ScalarField& f);
Vec2 grid_mean(const VectorField& f);

// ---------------------------------------------------------------------------
// Binary field dump: 16-byte header (magic "TKF1", u32 n, u32 components,
// u32 reserved), then little-endian float64 planes, row-major, one plane per
// component. CSV export: one row per node, columns x1,x2,value(s).
// ---------------------------------------------------------------------------

void write_field_dump(const std::string& path, const ScalarField& f);
void write_field_dump(const std::string& path, const VectorField& f);
ScalarField read_scalar_dump(const std::string& path, int k_max);
VectorField read_vector_dump(const std::string& path, int k_max);

void write_field_csv(const std::string& path, const ScalarField& f);
void write_field_csv(const std::string& path, const VectorField& f);

/// Consistent double formatting used by every CSV writer (reproducibility).
std::string format_double(double v);

}  // namespace vmt
