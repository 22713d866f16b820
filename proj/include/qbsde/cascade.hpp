#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qbsde/example1.hpp"
#include "qbsde/example2.hpp"
#include "qbsde/grid.hpp"
#include "qbsde/heat.hpp"

namespace qbsde {

// One problem instance of the semilinear terminal-value equation
//
//   (d/dt + 1/2 Laplacian) v + (gamma/2) a(t,x,y) + v_x^2 + beta v_y^2 = 0,
//   v(T, x, y) = eta_bar(x, y) / 2,        beta = 1/alpha_coupling,
//
// whose solution is built level by level: level 0 carries the source and the
// terminal data, every later level the quadratic coupling of earlier
// gradients.
struct ProblemSpec {
  double alpha_coupling = -1.0;
  double beta = -1.0;   // weight on the v_y products; tied to 1/alpha_coupling
  double gamma = 2.0;   // drift weight; the level-0 source is (gamma/2) * a
  double T = 0.5;
  std::function<double(double, double, double)> source;   // a(t, x, y); empty = 0
  std::function<double(double, double)> eta_bar;          // terminal data; empty = 0
  // Analytic Dirichlet data per level for the truncated box, when closed
  // forms are known; empty selects reflective zero-Neumann edges.
  std::function<double(std::size_t, double, double, double)> level_boundary;
  std::string name = "custom";

  void validate() const {
    if (alpha_coupling == 0.0)
      throw std::invalid_argument("ProblemSpec: alpha_coupling must be nonzero");
    if (!(T > 0.0)) throw std::invalid_argument("ProblemSpec: T must be positive");
    if (std::abs(beta * alpha_coupling - 1.0) > 1e-12)
      throw std::invalid_argument("ProblemSpec: beta must equal 1/alpha_coupling within 1e-12");
  }
};

namespace detail {
inline double pow_u(double base, unsigned e) {
  double acc = 1.0, b = base;
  for (; e; e >>= 1, b *= b)
    if (e & 1) acc *= b;
  return acc;
}
}  // namespace detail

// Closed-form cascade levels for the two shipped problems. For the first,
//   v^n(t,x,y) = (1/2)(T-t)^(2n+1)(alpha_n x^2 + beta_n y^2)
//              + (alpha_n + beta_n)(T-t)^(2n+2)/(2(2n+2));
// the time-only tail absorbs the Laplacian of the spatial part.
inline double ex1_level_closed(const Ex1Coefficients& c, std::size_t n, double T, double t,
                               double x, double y) {
  if (n >= c.alpha.c.size())
    throw std::out_of_range("ex1_level_closed: level " + std::to_string(n) +
                            " beyond coefficient table of size " +
                            std::to_string(c.alpha.c.size()));
  const double p = detail::pow_u(T - t, unsigned(2 * n + 1));
  const double an = c.alpha.c[n], bn = c.beta.c[n];
  return 0.5 * p * (an * x * x + bn * y * y) +
         0.5 * (an + bn) * p * (T - t) / double(2 * n + 2);
}

// For the second problem the levels are harmonic in space, so no tail:
//   v^n(t,x,y) = (T-t)^(2n+1)((1/2)alpha_n x^2 + beta_n x y - (1/2)alpha_n y^2).
inline double ex2_level_closed(const Ex2Coefficients& c, std::size_t n, double T, double t,
                               double x, double y) {
  if (n >= c.alpha.c.size())
    throw std::out_of_range("ex2_level_closed: level " + std::to_string(n) +
                            " beyond coefficient table of size " +
                            std::to_string(c.alpha.c.size()));
  const double p = detail::pow_u(T - t, unsigned(2 * n + 1));
  const double an = c.alpha.c[n], bn = c.beta.c[n];
  return p * (0.5 * an * x * x + bn * x * y - 0.5 * an * y * y);
}

// Quadratic-source instance a = (x^2 + y^2)/2 with alpha = beta = -1,
// gamma = 2; per-level boundary data from the closed forms above.
inline ProblemSpec example1_problem(double T, std::size_t boundary_order = 40) {
  ProblemSpec s;
  s.alpha_coupling = -1.0;
  s.beta = -1.0;
  s.gamma = 2.0;
  s.T = T;
  s.name = "example1";
  s.source = [](double, double x, double y) { return 0.5 * (x * x + y * y); };
  s.level_boundary = [c = ex1_coefficients(boundary_order), T](std::size_t n, double t, double x,
                                                               double y) {
    return ex1_level_closed(c, n, T, t, x, y);
  };
  return s;
}

// Cross-term instance a = x*y, same couplings.
inline ProblemSpec example2_problem(double T, std::size_t boundary_order = 40) {
  ProblemSpec s;
  s.alpha_coupling = -1.0;
  s.beta = -1.0;
  s.gamma = 2.0;
  s.T = T;
  s.name = "example2";
  s.source = [](double, double x, double y) { return x * y; };
  s.level_boundary = [c = ex2_coefficients(boundary_order), T](std::size_t n, double t, double x,
                                                               double y) {
    return ex2_level_closed(c, n, T, t, x, y);
  };
  return s;
}

// One time slice of the nonlinear forcing feeding level n, in the halved
// symmetric-convolution convention:
//   (1/2) sum_{k=0}^{n-1} (vx^k vx^(n-1-k) + w vy^k vy^(n-1-k)),
// with the orthogonal weight w passed explicitly by the caller.
inline GridFunction cascade_source(std::span<const GridFunction> levels, std::size_t n,
                                   double beta_remark) {
  if (n < 1) throw std::invalid_argument("cascade_source: needs n >= 1");
  if (levels.size() < n)
    throw std::out_of_range("cascade_source: level " + std::to_string(n) + " needs " +
                            std::to_string(n) + " lower levels, got " +
                            std::to_string(levels.size()));
  for (std::size_t k = 1; k < n; ++k)
    if (!(levels[k].spec == levels[0].spec))
      throw std::invalid_argument("cascade_source: mismatched grids between levels");
  std::vector<GridFunction> gx, gy;
  gx.reserve(n);
  gy.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    gx.push_back(gradient_x(levels[k]));
    gy.push_back(gradient_y(levels[k]));
  }
  GridFunction s(levels[0].spec);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t m = n - 1 - k;
    for (std::size_t idx = 0; idx < s.values.size(); ++idx)
      s.values[idx] +=
          0.5 * (gx[k].values[idx] * gx[m].values[idx] +
                 beta_remark * gy[k].values[idx] * gy[m].values[idx]);
  }
  return s;
}

struct TimeSlice {
  double t = 0.0;
  GridFunction u;
};

struct CascadeOptions {
  Scheme scheme = Scheme::lod_backward_euler;
  unsigned n_threads = 1;
  std::size_t snapshot_stride = 0;  // 0 = auto, about 8 interior snapshots
  double probe_half_width = 1.0;    // norms taken over |x|, |y| <= this
};

struct CascadeResult {
  GridSpec grid;
  double T = 0.0;
  std::size_t nt = 0;
  std::size_t depth = 0;
  double probe_half_width = 1.0;
  // Snapshots run from t = T down to t = 0; both endpoints always stored.
  std::vector<std::vector<TimeSlice>> levels;        // [level][snapshot]
  std::vector<std::vector<TimeSlice>> partial_sums;  // [level][snapshot] of v^0+..+v^level
  // Sup over the probe box and every marched time step (not just snapshots).
  std::vector<double> level_probe_norms;
};

// Marches all levels together, one backward sweep over time: within a step,
// level n is advanced after levels 0..n-1, whose freshly cached gradients
// form its forcing. The forcing uses the full symmetric convolution
//   sum_{k=0}^{n-1} (vx^k vx^(n-1-k) + beta vy^k vy^(n-1-k))
// (twice cascade_source's halved convention: expanding (sum_k v^k)_x^2 at
// combined order n-1 counts every ordered pair once), so that the summed
// levels satisfy the quadratic equation in the ProblemSpec docstring.
inline CascadeResult run_cascade(const ProblemSpec& spec, const GridSpec& grid, std::size_t nt,
                                 std::size_t depth, const CascadeOptions& opt = {}) {
  spec.validate();
  if (nt < 1) throw std::invalid_argument("run_cascade: needs nt >= 1");

  CascadeResult res;
  res.grid = grid;
  res.T = spec.T;
  res.nt = nt;
  res.depth = depth;
  res.probe_half_width = opt.probe_half_width;
  res.levels.resize(depth + 1);
  res.partial_sums.resize(depth + 1);
  res.level_probe_norms.assign(depth + 1, 0.0);

  const double dt = spec.T / double(nt);
  const bool implicit_scheme = opt.scheme != Scheme::explicit_euler;

  // Probe window as index ranges, resolved once (tolerant comparison so that
  // nodes meant to sit exactly on the probe edge are kept).
  const double ptol = 1e-12 * (1.0 + opt.probe_half_width);
  std::size_t i_lo = grid.nx, i_hi = 0, j_lo = grid.ny, j_hi = 0;
  for (std::size_t i = 0; i < grid.nx; ++i)
    if (std::abs(grid.x(i)) <= opt.probe_half_width + ptol) {
      i_lo = std::min(i_lo, i);
      i_hi = std::max(i_hi, i);
    }
  for (std::size_t j = 0; j < grid.ny; ++j)
    if (std::abs(grid.y(j)) <= opt.probe_half_width + ptol) {
      j_lo = std::min(j_lo, j);
      j_hi = std::max(j_hi, j);
    }
  const bool probe_empty = i_lo > i_hi || j_lo > j_hi;
  auto probe_norm = [&](const GridFunction& u) {
    if (probe_empty) return 0.0;
    double m = 0.0;
    for (std::size_t j = j_lo; j <= j_hi; ++j)
      for (std::size_t i = i_lo; i <= i_hi; ++i) m = std::max(m, std::abs(u.at(i, j)));
    return m;
  };

  // Terminal slices: level 0 takes eta_bar/2, the rest start at zero.
  std::vector<GridFunction> v(depth + 1, GridFunction(grid));
  if (spec.eta_bar)
    v[0] = sample_grid(grid, [&](double x, double y) { return 0.5 * spec.eta_bar(x, y); });

  std::vector<std::unique_ptr<BackwardHeatStepper>> steppers;
  steppers.reserve(depth + 1);
  for (std::size_t n = 0; n <= depth; ++n) {
    BoundaryCondition bc;
    if (spec.level_boundary)
      bc.dirichlet = [lb = spec.level_boundary, n](double t, double x, double y) {
        return lb(n, t, x, y);
      };
    steppers.push_back(
        std::make_unique<BackwardHeatStepper>(grid, dt, opt.scheme, std::move(bc), opt.n_threads));
  }

  const std::size_t stride =
      opt.snapshot_stride ? opt.snapshot_stride : std::max<std::size_t>(1, nt / 8);
  auto record = [&](double t) {
    GridFunction sum(grid);
    for (std::size_t n = 0; n <= depth; ++n) {
      res.levels[n].push_back({t, v[n]});
      for (std::size_t idx = 0; idx < sum.values.size(); ++idx)
        sum.values[idx] += v[n].values[idx];
      res.partial_sums[n].push_back({t, sum});
    }
  };

  for (std::size_t n = 0; n <= depth; ++n)
    res.level_probe_norms[n] = probe_norm(v[n]);
  record(spec.T);

  std::vector<GridFunction> gx(depth + 1, GridFunction(grid));
  std::vector<GridFunction> gy(depth + 1, GridFunction(grid));
  GridFunction src(grid);

  auto sample_source = [&](double t) {
    if (!spec.source) return false;
    const double w = 0.5 * spec.gamma;
    for (std::size_t j = 0; j < grid.ny; ++j)
      for (std::size_t i = 0; i < grid.nx; ++i)
        src.at(i, j) = w * spec.source(t, grid.x(i), grid.y(j));
    return true;
  };
  auto convolve_source = [&](std::size_t n) {
    std::fill(src.values.begin(), src.values.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t m = n - 1 - k;
      for (std::size_t idx = 0; idx < src.values.size(); ++idx)
        src.values[idx] += gx[k].values[idx] * gx[m].values[idx] +
                           spec.beta * gy[k].values[idx] * gy[m].values[idx];
    }
  };

  for (std::size_t k = 1; k <= nt; ++k) {
    const double t_new = spec.T * double(nt - k) / double(nt);
    const double t_old = spec.T * double(nt - k + 1) / double(nt);
    if (!implicit_scheme && depth > 0) {
      for (std::size_t n = 0; n < depth; ++n) {
        gx[n] = gradient_x(v[n]);
        gy[n] = gradient_y(v[n]);
      }
    }
    for (std::size_t n = 0; n <= depth; ++n) {
      const GridFunction* s = nullptr;
      if (n == 0) {
        if (sample_source(implicit_scheme ? t_new : t_old)) s = &src;
      } else {
        convolve_source(n);
        s = &src;
      }
      steppers[n]->step(v[n], t_new, s);
      if (implicit_scheme && n < depth) {
        gx[n] = gradient_x(v[n]);
        gy[n] = gradient_y(v[n]);
      }
      res.level_probe_norms[n] = std::max(res.level_probe_norms[n], probe_norm(v[n]));
    }
    if (k == nt || k % stride == 0) record(t_new);
  }
  return res;
}

// Level 0 on its own: the linear backward heat solve with the weighted
// source and terminal data.
inline std::vector<TimeSlice> solve_level0(const ProblemSpec& spec, const GridSpec& grid,
                                           std::size_t nt, const CascadeOptions& opt = {}) {
  CascadeResult r = run_cascade(spec, grid, nt, 0, opt);
  return std::move(r.levels[0]);
}

struct LevelRatios {
  std::vector<double> ratio;      // ratio[n] = norm(level n+1) / norm(level n)
  std::vector<bool> zero_norm;    // true where the denominator vanished
};

// Empirical decay diagnostic across levels, on the probe-box sup norms.
inline LevelRatios level_norm_ratio(const CascadeResult& res) {
  if (res.levels.size() < 3)
    throw std::invalid_argument("level_norm_ratio: needs at least 3 levels, got " +
                                std::to_string(res.levels.size()));
  LevelRatios out;
  for (std::size_t n = 0; n + 1 < res.level_probe_norms.size(); ++n) {
    const double lo = res.level_probe_norms[n];
    const double hi = res.level_probe_norms[n + 1];
    if (lo == 0.0) {
      out.ratio.push_back(0.0);
      out.zero_norm.push_back(true);
    } else {
      out.ratio.push_back(hi / lo);
      out.zero_norm.push_back(false);
    }
  }
  return out;
}

}  // namespace qbsde
