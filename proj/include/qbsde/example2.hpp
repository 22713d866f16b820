#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qbsde/exact.hpp"
#include "qbsde/odd_series.hpp"

namespace qbsde {

// Second benchmark: driver integrand w * w_perp, coupling alpha = -1, gamma = 2.
// Coupled coefficient families
//   alpha_{n+1} = 2/(2n+3) sum (alpha_k alpha_{n-k} - beta_k beta_{n-k}),
//   beta_{n+1}  = 4/(2n+3) sum alpha_k beta_{n-k},
// with alpha_0 = 0, beta_0 = 1. The combination zeta = alpha + i beta solves
// zeta' = i + 2 zeta^2, zeta(0) = 0, hence zeta(s) = tan((1+i)s)/(1-i).
// Nearest zeros of cos((1+i)s) sit at |s| = pi/(2 sqrt2): same blow-up modulus
// as the first benchmark, but the real-axis solution is global.

struct Ex2Coefficients {
  OddSeriesD alpha;
  OddSeriesD beta;
};

struct Ex2CoefficientsExact {
  OddSeries<Rational> alpha;
  OddSeries<Rational> beta;
};

inline Ex2CoefficientsExact ex2_coefficients_exact(std::size_t N) {
  Ex2CoefficientsExact r;
  r.alpha.c.assign(1, Rational(0));
  r.beta.c.assign(1, Rational(1));
  for (std::size_t n = 0; n < N; ++n) {
    const Rational caa = cauchy_convolve(r.alpha, r.alpha, n);
    const Rational cbb = cauchy_convolve(r.beta, r.beta, n);
    const Rational cab = cauchy_convolve(r.alpha, r.beta, n);
    r.alpha.c.push_back(Rational(2, 2 * n + 3) * (caa - cbb));
    r.beta.c.push_back(Rational(4, 2 * n + 3) * cab);
  }
  return r;
}

inline Ex2Coefficients ex2_coefficients(std::size_t N) {
  Ex2Coefficients r;
  r.alpha.c.assign(1, 0.0);
  r.beta.c.assign(1, 1.0);
  for (std::size_t n = 0; n < N; ++n) {
    const double caa = cauchy_convolve(r.alpha, r.alpha, n);
    const double cbb = cauchy_convolve(r.beta, r.beta, n);
    const double cab = cauchy_convolve(r.alpha, r.beta, n);
    r.alpha.c.push_back(2.0 / double(2 * n + 3) * (caa - cbb));
    r.beta.c.push_back(4.0 / double(2 * n + 3) * cab);
  }
  return r;
}

inline std::complex<double> ex2_zeta(double s) {
  const std::complex<double> i(0.0, 1.0);
  return std::tan((1.0 + i) * s) / (1.0 - i);
}

struct Ex2Closed {
  double alpha;
  double beta;
};

// Real/imaginary closed forms
//   alpha(s) = (sin 2s - sinh 2s) / (4 D),  beta(s) = (sin 2s + sinh 2s) / (4 D),
//   D = cos^2 s cosh^2 s + sin^2 s sinh^2 s  (= |cos((1+i)s)|^2 > 0),
// cross-checked against the complex route on every call.
inline Ex2Closed ex2_closed(double s) {
  if (std::abs(s) > 50.0)
    throw std::domain_error("ex2_closed: |s| > 50 (hyperbolic overflow range)");
  const double d = std::pow(std::cos(s) * std::cosh(s), 2) + std::pow(std::sin(s) * std::sinh(s), 2);
  const Ex2Closed v{(std::sin(2.0 * s) - std::sinh(2.0 * s)) / (4.0 * d),
                    (std::sin(2.0 * s) + std::sinh(2.0 * s)) / (4.0 * d)};
  const std::complex<double> z = ex2_zeta(s);
  if (std::abs(z.real() - v.alpha) > 1e-12 || std::abs(z.imag() - v.beta) > 1e-12)
    throw std::logic_error("ex2_closed: complex and real evaluations disagree at s = " +
                           std::to_string(s));
  return v;
}

// Max residual |zeta' - i - 2 zeta^2| over the grid, zeta' = i sec^2((1+i)s).
inline double ex2_zeta_residual(std::span<const double> grid) {
  const std::complex<double> i(0.0, 1.0);
  double worst = 0.0;
  for (double s : grid) {
    const std::complex<double> z = ex2_zeta(s);
    const std::complex<double> c = std::cos((1.0 + i) * s);
    const std::complex<double> dz = i / (c * c);
    worst = std::max(worst, std::abs(dz - i - 2.0 * z * z));
  }
  return worst;
}

// Minimum of the closed-form denominator over [0, s_max] with the given step;
// positivity is what makes the real-axis solution global.
inline double ex2_denominator_min(double s_max, double step) {
  double lo = std::numeric_limits<double>::infinity();
  for (double s = 0.0; s <= s_max + 0.5 * step; s += step) {
    const double d =
        std::pow(std::cos(s) * std::cosh(s), 2) + std::pow(std::sin(s) * std::sinh(s), 2);
    lo = std::min(lo, d);
  }
  return lo;
}

}  // namespace qbsde
