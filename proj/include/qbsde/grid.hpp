#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbsde {

// Uniform tensor grid on [x0,x1] x [y0,y1] with nx x ny nodes (endpoints
// included), so nx, ny >= 2.
struct GridSpec {
  std::size_t nx = 2;
  std::size_t ny = 2;
  double x0 = -1.0, x1 = 1.0;
  double y0 = -1.0, y1 = 1.0;

  double hx() const { return (x1 - x0) / double(nx - 1); }
  double hy() const { return (y1 - y0) / double(ny - 1); }
  double x(std::size_t i) const { return x0 + double(i) * hx(); }
  double y(std::size_t j) const { return y0 + double(j) * hy(); }
  std::size_t size() const { return nx * ny; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Scalar field sampled on a GridSpec; row-major with x fastest
// (values[j*nx + i] is the node (x_i, y_j)).
struct GridFunction {
  GridSpec spec;
  std::vector<double> values;

  explicit GridFunction(const GridSpec& g = {}) : spec(g), values(g.size(), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return values[j * spec.nx + i]; }
  double at(std::size_t i, std::size_t j) const { return values[j * spec.nx + i]; }
};

// Fills a grid function from f(x, y).
template <typename F>
GridFunction sample_grid(const GridSpec& g, F&& f) {
  GridFunction u(g);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) u.at(i, j) = f(g.x(i), g.y(j));
  return u;
}

namespace detail {
inline void check_differentiable(const GridSpec& g) {
  if (g.nx < 3 || g.ny < 3)
    throw std::invalid_argument("gradient: needs at least 3 nodes per direction, got " +
                                std::to_string(g.nx) + " x " + std::to_string(g.ny));
}
}  // namespace detail

// d/dx by second-order differences: central inside, one-sided
// (-3 f0 + 4 f1 - f2) / (2h) at the two edges. Exact on quadratics.
inline GridFunction gradient_x(const GridFunction& u) {
  detail::check_differentiable(u.spec);
  const GridSpec& g = u.spec;
  GridFunction d(g);
  const double inv2h = 1.0 / (2.0 * g.hx());
  for (std::size_t j = 0; j < g.ny; ++j) {
    d.at(0, j) = (-3.0 * u.at(0, j) + 4.0 * u.at(1, j) - u.at(2, j)) * inv2h;
    for (std::size_t i = 1; i + 1 < g.nx; ++i)
      d.at(i, j) = (u.at(i + 1, j) - u.at(i - 1, j)) * inv2h;
    d.at(g.nx - 1, j) =
        (3.0 * u.at(g.nx - 1, j) - 4.0 * u.at(g.nx - 2, j) + u.at(g.nx - 3, j)) * inv2h;
  }
  return d;
}

inline GridFunction gradient_y(const GridFunction& u) {
  detail::check_differentiable(u.spec);
  const GridSpec& g = u.spec;
  GridFunction d(g);
  const double inv2h = 1.0 / (2.0 * g.hy());
  for (std::size_t i = 0; i < g.nx; ++i) {
    d.at(i, 0) = (-3.0 * u.at(i, 0) + 4.0 * u.at(i, 1) - u.at(i, 2)) * inv2h;
    for (std::size_t j = 1; j + 1 < g.ny; ++j)
      d.at(i, j) = (u.at(i, j + 1) - u.at(i, j - 1)) * inv2h;
    d.at(i, g.ny - 1) =
        (3.0 * u.at(i, g.ny - 1) - 4.0 * u.at(i, g.ny - 2) + u.at(i, g.ny - 3)) * inv2h;
  }
  return d;
}

// Sup norm over the probe window |x| <= px, |y| <= py (grid nodes only;
// tolerant comparison keeps nodes meant to sit exactly on the window edge).
inline double probe_max_abs(const GridFunction& u, double px, double py) {
  const GridSpec& g = u.spec;
  const double tx = px + 1e-12 * (1.0 + px);
  const double ty = py + 1e-12 * (1.0 + py);
  double m = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j) {
    if (std::abs(g.y(j)) > ty) continue;
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (std::abs(g.x(i)) > tx) continue;
      m = std::max(m, std::abs(u.at(i, j)));
    }
  }
  return m;
}

inline double max_abs(const GridFunction& u) {
  double m = 0.0;
  for (double v : u.values) m = std::max(m, std::abs(v));
  return m;
}

// Node difference sup norm; grids must match.
inline double max_abs_diff(const GridFunction& a, const GridFunction& b) {
  if (!(a.spec == b.spec))
    throw std::invalid_argument("max_abs_diff: grid specs differ");
  double m = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    m = std::max(m, std::abs(a.values[k] - b.values[k]));
  return m;
}

// 17 significant digits: round-trips a double exactly through decimal text.
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// CSV rows "x,y,value", one node per line, same traversal order as storage.
inline void write_csv(std::ostream& os, const GridFunction& u) {
  os << "x,y,value\n";
  const GridSpec& g = u.spec;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i)
      os << format_value(g.x(i)) << ',' << format_value(g.y(j)) << ','
         << format_value(u.at(i, j)) << '\n';
}

}  // namespace qbsde
