#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qbsde/grid.hpp"

namespace qbsde {

// Backward-in-time heat solvers for (d/dt + 1/2 Laplacian) u + S = 0 on a
// truncated box, marching from the terminal slice toward t = 0.
//
//  - lod_backward_euler: dimension-split implicit Euler; two tridiagonal
//    sweeps per step, unconditionally stable. The splitting defect is
//    (dt^2/4) DxxDyy u per step, which vanishes identically on spatially
//    quadratic solutions, so on those this scheme coincides with the full
//    implicit operator.
//  - full_backward_euler: unsplit implicit Euler, one sparse LU solve per
//    step (factorized once since dt is fixed).
//  - explicit_euler: conditionally stable, guarded by dt <= min(hx,hy)^2/4
//    and refused up front when violated.
enum class Scheme { lod_backward_euler, full_backward_euler, explicit_euler };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::lod_backward_euler: return "lod_backward_euler";
    case Scheme::full_backward_euler: return "full_backward_euler";
    case Scheme::explicit_euler: return "explicit_euler";
  }
  return "unknown";
}

// Dirichlet data from an analytic function of (t, x, y) when available;
// an empty function selects reflective zero-Neumann edges instead.
struct BoundaryCondition {
  std::function<double(double, double, double)> dirichlet;

  bool is_dirichlet() const { return static_cast<bool>(dirichlet); }
};

namespace detail {

// Constant-coefficient tridiagonal solve for (I - a D2) along one grid line.
// Forward-elimination multipliers depend only on (r, length, end handling),
// so they are precomputed once and reused for every line of every step.
class LineSolver {
 public:
  // r = a/h^2; doubled_ends selects the reflected (zero-Neumann) end rows
  // (1+2r) u_0 - 2r u_1 = rhs_0 instead of Dirichlet elimination.
  LineSolver() = default;
  LineSolver(std::size_t m, double r, bool doubled_ends) : r_(r), m_(m) {
    cp_.resize(m);
    inv_.resize(m);
    const double diag = 1.0 + 2.0 * r;
    const double upper_first = doubled_ends ? 2.0 * r : r;
    inv_[0] = 1.0 / diag;
    cp_[0] = upper_first * inv_[0];
    for (std::size_t i = 1; i < m; ++i) {
      const double lower = (doubled_ends && i == m - 1) ? 2.0 * r : r;
      const double denom = diag - lower * cp_[i - 1];
      inv_[i] = 1.0 / denom;
      cp_[i] = r * inv_[i];
    }
    last_lower_ = doubled_ends ? 2.0 * r : r;
  }

  std::size_t length() const { return m_; }

  // In-place solve; x enters holding the right-hand side.
  void solve(double* x) const {
    x[0] *= inv_[0];
    for (std::size_t i = 1; i < m_; ++i) {
      const double lower = (i == m_ - 1) ? last_lower_ : r_;
      x[i] = (x[i] + lower * x[i - 1]) * inv_[i];
    }
    for (std::size_t i = m_ - 1; i-- > 0;) x[i] += cp_[i] * x[i + 1];
  }

 private:
  double r_ = 0.0;
  double last_lower_ = 0.0;
  std::size_t m_ = 0;
  std::vector<double> cp_, inv_;
};

inline void parallel_lines(std::size_t count, unsigned n_threads,
                           const std::function<void(std::size_t, std::size_t)>& body) {
  if (n_threads <= 1 || count < 2 * n_threads) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  const std::size_t chunk = (count + n_threads - 1) / n_threads;
  for (unsigned t = 0; t < n_threads; ++t) {
    const std::size_t lo = std::min(count, std::size_t(t) * chunk);
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo < hi) pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

class BackwardHeatStepper {
 public:
  BackwardHeatStepper(const GridSpec& grid, double dt, Scheme scheme, BoundaryCondition bc,
                      unsigned n_threads = 1)
      : grid_(grid), dt_(dt), scheme_(scheme), bc_(std::move(bc)), n_threads_(n_threads) {
    if (!(dt > 0.0)) throw std::invalid_argument("BackwardHeatStepper: dt must be positive");
    if (grid.nx < 3 || grid.ny < 3)
      throw std::invalid_argument("BackwardHeatStepper: needs at least 3 nodes per direction");
    const double h2 = std::min(grid.hx(), grid.hy());
    if (scheme == Scheme::explicit_euler && dt > h2 * h2 / 4.0)
      throw std::invalid_argument(
          "BackwardHeatStepper: explicit scheme unstable, dt = " + std::to_string(dt) +
          " exceeds min(hx,hy)^2/4 = " + std::to_string(h2 * h2 / 4.0));
    const double a = dt / 2.0;
    rx_ = a / (grid.hx() * grid.hx());
    ry_ = a / (grid.hy() * grid.hy());
    if (scheme == Scheme::lod_backward_euler) {
      const bool neumann = !bc_.is_dirichlet();
      // Dirichlet sweeps act on interior unknowns only; Neumann sweeps span
      // the whole line with reflected end rows.
      sx_ = detail::LineSolver(neumann ? grid.nx : grid.nx - 2, rx_, neumann);
      sy_ = detail::LineSolver(neumann ? grid.ny : grid.ny - 2, ry_, neumann);
    } else if (scheme == Scheme::full_backward_euler) {
      build_full_matrix();
    }
  }

  const GridSpec& grid() const { return grid_; }
  double dt() const { return dt_; }
  Scheme scheme() const { return scheme_; }

  // Advances the slice held in u one step backward in time, to t_new.
  // source, when present, is sampled on the same grid; implicit schemes
  // expect it at t_new, the explicit scheme at the departure time t_new+dt.
  void step(GridFunction& u, double t_new, const GridFunction* source) {
    if (!(u.spec == grid_)) throw std::invalid_argument("step: slice grid mismatch");
    if (source && !(source->spec == grid_))
      throw std::invalid_argument("step: source grid mismatch");
    switch (scheme_) {
      case Scheme::lod_backward_euler: step_lod(u, t_new, source); break;
      case Scheme::full_backward_euler: step_full(u, t_new, source); break;
      case Scheme::explicit_euler: step_explicit(u, t_new, source); break;
    }
  }

 private:
  void fill_dirichlet_edges(GridFunction& u, double t) const {
    for (std::size_t i = 0; i < grid_.nx; ++i) {
      u.at(i, 0) = bc_.dirichlet(t, grid_.x(i), grid_.y(0));
      u.at(i, grid_.ny - 1) = bc_.dirichlet(t, grid_.x(i), grid_.y(grid_.ny - 1));
    }
    for (std::size_t j = 0; j < grid_.ny; ++j) {
      u.at(0, j) = bc_.dirichlet(t, grid_.x(0), grid_.y(j));
      u.at(grid_.nx - 1, j) = bc_.dirichlet(t, grid_.x(grid_.nx - 1), grid_.y(j));
    }
  }

  void step_lod(GridFunction& u, double t_new, const GridFunction* source) {
    const std::size_t nx = grid_.nx, ny = grid_.ny;
    const double a = dt_ / 2.0;
    if (rhs_.values.size() != u.values.size()) rhs_ = GridFunction(grid_);
    for (std::size_t k = 0; k < u.values.size(); ++k)
      rhs_.values[k] = u.values[k] + (source ? dt_ * source->values[k] : 0.0);

    if (bc_.is_dirichlet()) {
      const auto& g = bc_.dirichlet;
      // Intermediate field w = (I - a D2y) u(t_new); its Dirichlet value on
      // the x-edges is g - a D2y g, with D2y taken as the same second
      // difference the y-sweep will invert (exact on quadratic data).
      const double x_lo = grid_.x(0), x_hi = grid_.x(nx - 1);
      const double hy2 = grid_.hy() * grid_.hy();
      auto wstar = [&](double xe, std::size_t j) {
        const double gm = g(t_new, xe, grid_.y(j - 1));
        const double gc = g(t_new, xe, grid_.y(j));
        const double gp = g(t_new, xe, grid_.y(j + 1));
        return gc - a * (gm - 2.0 * gc + gp) / hy2;
      };
      detail::parallel_lines(ny - 2, n_threads_, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t jj = lo; jj < hi; ++jj) {
          const std::size_t j = jj + 1;
          double* row = &rhs_.values[j * nx];
          row[1] += rx_ * wstar(x_lo, j);
          row[nx - 2] += rx_ * wstar(x_hi, j);
          sx_.solve(row + 1);
        }
      });
      detail::parallel_lines(nx - 2, n_threads_, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> col(ny - 2);
        for (std::size_t ii = lo; ii < hi; ++ii) {
          const std::size_t i = ii + 1;
          for (std::size_t j = 1; j + 1 < ny; ++j) col[j - 1] = rhs_.at(i, j);
          col[0] += ry_ * g(t_new, grid_.x(i), grid_.y(0));
          col[ny - 3] += ry_ * g(t_new, grid_.x(i), grid_.y(ny - 1));
          sy_.solve(col.data());
          for (std::size_t j = 1; j + 1 < ny; ++j) u.at(i, j) = col[j - 1];
        }
      });
      fill_dirichlet_edges(u, t_new);
    } else {
      detail::parallel_lines(ny, n_threads_, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j) sx_.solve(&rhs_.values[j * nx]);
      });
      detail::parallel_lines(nx, n_threads_, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> col(ny);
        for (std::size_t i = lo; i < hi; ++i) {
          for (std::size_t j = 0; j < ny; ++j) col[j] = rhs_.at(i, j);
          sy_.solve(col.data());
          for (std::size_t j = 0; j < ny; ++j) u.at(i, j) = col[j];
        }
      });
    }
  }

  void build_full_matrix() {
    const std::size_t nx = grid_.nx, ny = grid_.ny;
    const auto idx = [nx](std::size_t i, std::size_t j) { return Eigen::Index(j * nx + i); };
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * nx * ny);
    const bool dir = bc_.is_dirichlet();
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const bool edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
        if (dir && edge) {
          trip.emplace_back(idx(i, j), idx(i, j), 1.0);
          continue;
        }
        trip.emplace_back(idx(i, j), idx(i, j), 1.0 + 2.0 * rx_ + 2.0 * ry_);
        // Reflected neighbors double up on the inward side at Neumann edges.
        if (i == 0) {
          trip.emplace_back(idx(i, j), idx(i + 1, j), -2.0 * rx_);
        } else if (i == nx - 1) {
          trip.emplace_back(idx(i, j), idx(i - 1, j), -2.0 * rx_);
        } else {
          trip.emplace_back(idx(i, j), idx(i - 1, j), -rx_);
          trip.emplace_back(idx(i, j), idx(i + 1, j), -rx_);
        }
        if (j == 0) {
          trip.emplace_back(idx(i, j), idx(i, j + 1), -2.0 * ry_);
        } else if (j == ny - 1) {
          trip.emplace_back(idx(i, j), idx(i, j - 1), -2.0 * ry_);
        } else {
          trip.emplace_back(idx(i, j), idx(i, j - 1), -ry_);
          trip.emplace_back(idx(i, j), idx(i, j + 1), -ry_);
        }
      }
    }
    Eigen::SparseMatrix<double> A(Eigen::Index(nx * ny), Eigen::Index(nx * ny));
    A.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(A);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("BackwardHeatStepper: sparse factorization failed");
  }

  void step_full(GridFunction& u, double t_new, const GridFunction* source) {
    const std::size_t nx = grid_.nx, ny = grid_.ny;
    Eigen::VectorXd b(Eigen::Index(nx * ny));
    const bool dir = bc_.is_dirichlet();
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t k = j * nx + i;
        const bool edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
        if (dir && edge)
          b[Eigen::Index(k)] = bc_.dirichlet(t_new, grid_.x(i), grid_.y(j));
        else
          b[Eigen::Index(k)] = u.values[k] + (source ? dt_ * source->values[k] : 0.0);
      }
    const Eigen::VectorXd x = lu_.solve(b);
    for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] = x[Eigen::Index(k)];
  }

  void step_explicit(GridFunction& u, double t_new, const GridFunction* source) {
    const std::size_t nx = grid_.nx, ny = grid_.ny;
    if (rhs_.values.size() != u.values.size()) rhs_ = GridFunction(grid_);
    const double cx = dt_ / (2.0 * grid_.hx() * grid_.hx());
    const double cy = dt_ / (2.0 * grid_.hy() * grid_.hy());
    detail::parallel_lines(ny, n_threads_, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
          const double c = u.at(i, j);
          const double xm = i > 0 ? u.at(i - 1, j) : u.at(i + 1, j);
          const double xp = i + 1 < nx ? u.at(i + 1, j) : u.at(i - 1, j);
          const double ym = j > 0 ? u.at(i, j - 1) : u.at(i, j + 1);
          const double yp = j + 1 < ny ? u.at(i, j + 1) : u.at(i, j - 1);
          rhs_.at(i, j) = c + cx * (xm - 2.0 * c + xp) + cy * (ym - 2.0 * c + yp) +
                          (source ? dt_ * source->at(i, j) : 0.0);
        }
    });
    u.values.swap(rhs_.values);
    if (bc_.is_dirichlet()) fill_dirichlet_edges(u, t_new);
  }

  GridSpec grid_;
  double dt_ = 0.0;
  Scheme scheme_ = Scheme::lod_backward_euler;
  BoundaryCondition bc_;
  unsigned n_threads_ = 1;
  double rx_ = 0.0, ry_ = 0.0;
  detail::LineSolver sx_, sy_;
  GridFunction rhs_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace qbsde
