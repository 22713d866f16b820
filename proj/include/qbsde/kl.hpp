#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qbsde/stats.hpp"

namespace qbsde {

// Eigenpairs of the Brownian covariance operator f -> int_0^1 (t ^ s) f(s) ds
// on [0, 1]:
//   lambda_n = 1 / ((n - 1/2)^2 pi^2),   e_n(t) = sqrt(2) sin((n - 1/2) pi t),
// indexed from n = 1.
struct KLExpansion {
  std::size_t n_modes = 0;
  std::vector<double> lambdas;  // lambdas[k] holds lambda_{k+1}

  double lambda(std::size_t n) const {  // 1-based
    if (n < 1 || n > n_modes)
      throw std::out_of_range("KLExpansion: mode " + std::to_string(n) + " of " +
                              std::to_string(n_modes));
    return lambdas[n - 1];
  }
  double efunc(std::size_t n, double t) const {  // 1-based
    return std::numbers::sqrt2 * std::sin((double(n) - 0.5) * std::numbers::pi * t);
  }
};

inline KLExpansion kl_expansion(std::size_t n_modes) {
  if (n_modes < 1) throw std::invalid_argument("kl_expansion: needs n_modes >= 1");
  KLExpansion e;
  e.n_modes = n_modes;
  e.lambdas.reserve(n_modes);
  for (std::size_t n = 1; n <= n_modes; ++n) {
    const double d = (double(n) - 0.5) * std::numbers::pi;
    e.lambdas.push_back(1.0 / (d * d));
  }
  return e;
}

struct KLProduct {
  double value = 1.0;
  double tail_bound = 0.0;  // bound on the absolute truncation deficit
};

// Truncated eigenvalue product  prod_{n<=N} (1 - 2 T^2 lambda_n)^(-1/2),
// which converges (in N) to 1/sqrt(cos(sqrt2 T)). Requires 2 T^2 lambda_1 < 1,
// i.e. T below pi/(2 sqrt2); at and beyond that the first factor is not
// positive and the full product diverges.
//
// Tail: the omitted log mass is bounded by
//   sum_{n>N} -log(1 - q_n)/2 <= T^2 / (pi^2 (N - 1/2) (1 - q_{N+1})),
// with q_n = 2 T^2 lambda_n, using -log(1-q) <= q/(1-q_{N+1}) for q <= q_{N+1}
// and sum_{n>N} (n-1/2)^-2 <= 1/(N-1/2).
inline KLProduct kl_product_formula(double T, std::size_t n_modes) {
  if (n_modes < 1) throw std::invalid_argument("kl_product_formula: needs n_modes >= 1");
  const double horizon = std::numbers::pi / (2.0 * std::numbers::sqrt2);
  const double q1 = 2.0 * T * T / ((0.5 * std::numbers::pi) * (0.5 * std::numbers::pi));
  if (q1 >= 1.0)
    throw std::domain_error("kl_product_formula: T = " + std::to_string(T) +
                            " at or beyond the horizon " + std::to_string(horizon) +
                            ", first factor not positive");
  // Accumulate in logs for stability.
  KahanSum logsum;
  for (std::size_t n = 1; n <= n_modes; ++n) {
    const double d = (double(n) - 0.5) * std::numbers::pi;
    logsum.add(-0.5 * std::log1p(-2.0 * T * T / (d * d)));
  }
  KLProduct p;
  p.value = std::exp(logsum.value());
  const double dnext = (double(n_modes) + 0.5) * std::numbers::pi;
  const double qnext = 2.0 * T * T / (dnext * dnext);
  const double logtail = T * T / (std::numbers::pi * std::numbers::pi *
                                  (double(n_modes) - 0.5) * (1.0 - qnext));
  p.tail_bound = p.value * std::expm1(logtail);
  return p;
}

// What the product converges to.
inline double exp_quadratic_closed_form(double T) {
  const double c = std::cos(std::numbers::sqrt2 * T);
  if (c <= 0.0)
    throw std::domain_error("exp_quadratic_closed_form: cos(sqrt2 T) <= 0 at T = " +
                            std::to_string(T));
  return 1.0 / std::sqrt(c);
}

namespace detail {
// Composite Simpson on [a, b] with n subintervals (n even, >= 2).
template <typename F>
double simpson(F&& f, double a, double b, std::size_t n) {
  if (n < 2) n = 2;
  if (n % 2) ++n;
  const double h = (b - a) / double(n);
  KahanSum s;
  s.add(f(a));
  s.add(f(b));
  for (std::size_t i = 1; i < n; ++i) s.add((i % 2 ? 4.0 : 2.0) * f(a + double(i) * h));
  return s.value() * h / 3.0;
}
}  // namespace detail

struct KLOrthogonality {
  double max_offdiag = 0.0;        // |<e_n, e_m>| over n != m
  double max_diag_deviation = 0.0; // |<e_n, e_n> - 1|
  double max_eigen_residual = 0.0; // |int_0^1 (t^s) e_n(s) ds - lambda_n e_n(t)|
};

// Quadrature check that the modes are orthonormal and solve the eigenproblem.
// The kernel t ^ s has a kink at s = t, so the eigen-integral is split there
// and Simpson applied to each smooth piece.
inline KLOrthogonality kl_orthogonality_check(std::size_t n_modes, std::size_t quadrature_points) {
  const KLExpansion e = kl_expansion(n_modes);
  KLOrthogonality r;
  for (std::size_t n = 1; n <= n_modes; ++n)
    for (std::size_t m = n; m <= n_modes; ++m) {
      const double ip = detail::simpson(
          [&](double t) { return e.efunc(n, t) * e.efunc(m, t); }, 0.0, 1.0, quadrature_points);
      if (n == m)
        r.max_diag_deviation = std::max(r.max_diag_deviation, std::abs(ip - 1.0));
      else
        r.max_offdiag = std::max(r.max_offdiag, std::abs(ip));
    }
  for (std::size_t n = 1; n <= n_modes; ++n)
    for (int k = 0; k <= 10; ++k) {
      const double t = double(k) / 10.0;
      const std::size_t half = std::max<std::size_t>(quadrature_points / 2, 2);
      const double left =
          t > 0.0 ? detail::simpson([&](double s) { return s * e.efunc(n, s); }, 0.0, t, half)
                  : 0.0;
      const double right =
          t < 1.0 ? t * detail::simpson([&](double s) { return e.efunc(n, s); }, t, 1.0, half)
                  : 0.0;
      r.max_eigen_residual =
          std::max(r.max_eigen_residual, std::abs(left + right - e.lambda(n) * e.efunc(n, t)));
    }
  return r;
}

}  // namespace qbsde
