#include "vmtorus/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vmt {

double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }

Vec2 torus_wrap(Vec2 x) {
  double a = x.x - std::floor(x.x);
  double b = x.y - std::floor(x.y);
  if (a >= 1.0) a -= 1.0;  // guard against floor rounding at 1-eps
  if (b >= 1.0) b -= 1.0;
  return {a, b};
}

Vec2 torus_delta(Vec2 a, Vec2 b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  dx -= std::round(dx);
  dy -= std::round(dy);
  return {dx, dy};
}

double torus_dist(Vec2 a, Vec2 b) { return norm(torus_delta(a, b)); }

void GridSpec::validate() const {
  if (n < 8) throw std::invalid_argument("GridSpec: n must be >= 8");
  if ((n & (n - 1)) != 0) throw std::invalid_argument("GridSpec: n must be a power of two");
  if (k_max < 1) throw std::invalid_argument("GridSpec: k_max must be >= 1");
  if (k_max > n / 2 - 1) throw std::invalid_argument("GridSpec: k_max must be <= n/2 - 1");
}

ScalarField ScalarField::sample(GridSpec g, const std::function<double(Vec2)>& f) {
  g.validate();
  ScalarField out(g);
  for (int a = 0; a < g.n; ++a)
    for (int b = 0; b < g.n; ++b) out.at(a, b) = f(out.node(a, b));
  return out;
}

VectorField VectorField::sample(GridSpec g, const std::function<Vec2(Vec2)>& f) {
  g.validate();
  VectorField out(g);
  for (int a = 0; a < g.n; ++a)
    for (int b = 0; b < g.n; ++b) out.set(a, b, f(Vec2{double(a) / g.n, double(b) / g.n}));
  return out;
}

void ScalarField::check_finite(const char* what) const {
  for (double v : values)
    if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite sample");
}

void VectorField::check_finite(const char* what) const {
  for (double v : c1)
    if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite sample");
  for (double v : c2)
    if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite sample");
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

double max_abs(const VectorField& f) {
  double m = 0.0;
  for (size_t i = 0; i < f.c1.size(); ++i)
    m = std::max(m, std::max(std::abs(f.c1[i]), std::abs(f.c2[i])));
  return m;
}

double grid_mean(const ScalarField& f) {
  double s = 0.0, comp = 0.0;  // Kahan
  for (double v : f.values) {
    double y = v - comp;
    double t = s + y;
    comp = (t - s) - y;
    s = t;
  }
  return s / double(f.values.size());
}

Vec2 grid_mean(const VectorField& f) {
  double s1 = 0.0, s2 = 0.0;
  for (size_t i = 0; i < f.c1.size(); ++i) {
    s1 += f.c1[i];
    s2 += f.c2[i];
  }
  return {s1 / double(f.c1.size()), s2 / double(f.c2.size())};
}

namespace {

constexpr char kMagic[4] = {'T', 'K', 'F', '1'};

void write_header(std::ofstream& os, uint32_t n, uint32_t components) {
  uint32_t reserved = 0;
  os.write(kMagic, 4);
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&components), 4);
  os.write(reinterpret_cast<const char*>(&reserved), 4);
}

std::pair<uint32_t, uint32_t> read_header(std::ifstream& is, const std::string& path) {
  char magic[4];
  uint32_t n = 0, components = 0, reserved = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&components), 4);
  is.read(reinterpret_cast<char*>(&reserved), 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("field dump " + path + ": bad magic");
  return {n, components};
}

void write_plane(std::ofstream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

std::vector<double> read_plane(std::ifstream& is, size_t count, const std::string& path) {
  std::vector<double> v(count);
  is.read(reinterpret_cast<char*>(v.data()), std::streamsize(count * sizeof(double)));
  if (!is) throw std::runtime_error("field dump " + path + ": truncated data");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  return os;
}

}  // namespace

void write_field_dump(const std::string& path, const ScalarField& f) {
  auto os = open_out(path);
  write_header(os, uint32_t(f.grid.n), 1);
  write_plane(os, f.values);
}

void write_field_dump(const std::string& path, const VectorField& f) {
  auto os = open_out(path);
  write_header(os, uint32_t(f.grid.n), 2);
  write_plane(os, f.c1);
  write_plane(os, f.c2);
}

ScalarField read_scalar_dump(const std::string& path, int k_max) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  auto [n, components] = read_header(is, path);
  if (components != 1) throw std::runtime_error("field dump " + path + ": expected 1 component");
  ScalarField f(GridSpec{int(n), k_max});
  f.values = read_plane(is, size_t(n) * n, path);
  return f;
}

VectorField read_vector_dump(const std::string& path, int k_max) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  auto [n, components] = read_header(is, path);
  if (components != 2) throw std::runtime_error("field dump " + path + ": expected 2 components");
  VectorField f(GridSpec{int(n), k_max});
  f.c1 = read_plane(is, size_t(n) * n, path);
  f.c2 = read_plane(is, size_t(n) * n, path);
  return f;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_field_csv(const std::string& path, const ScalarField& f) {
  auto os = open_out(path);
  os << "x1,x2,value\n";
  for (int a = 0; a < f.grid.n; ++a)
    for (int b = 0; b < f.grid.n; ++b) {
      Vec2 x = f.node(a, b);
      os << format_double(x.x) << ',' << format_double(x.y) << ','
         << format_double(f.at(a, b)) << '\n';
    }
}

void write_field_csv(const std::string& path, const VectorField& f) {
  auto os = open_out(path);
  os << "x1,x2,value1,value2\n";
  for (int a = 0; a < f.grid.n; ++a)
    for (int b = 0; b < f.grid.n; ++b) {
      Vec2 x{double(a) / f.grid.n, double(b) / f.grid.n};
      Vec2 v = f.at(a, b);
      os << format_double(x.x) << ',' << format_double(x.y) << ','
         << format_double(v.x) << ',' << format_double(v.y) << '\n';
    }
}

}  // namespace vmt
