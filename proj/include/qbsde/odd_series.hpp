#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbsde {

// Odd power series sum_{n>=0} c[n] * s^(2n+1). The coefficient type is either
// double or an exact rational; all algebra below is agnostic to that choice.
template <typename T>
struct OddSeries {
  std::vector<T> c;

  std::size_t order() const { return c.empty() ? 0 : c.size() - 1; }
};

using OddSeriesD = OddSeries<double>;

// Cauchy convolution coefficient sum_{k=0}^{n} a[k] * b[n-k].
template <typename T>
T cauchy_convolve(const OddSeries<T>& a, const OddSeries<T>& b, std::size_t n) {
  if (a.c.size() <= n)
    throw std::out_of_range("cauchy_convolve: first series missing coefficient index " +
                            std::to_string(n) + " (holds " + std::to_string(a.c.size()) + ")");
  if (b.c.size() <= n)
    throw std::out_of_range("cauchy_convolve: second series missing coefficient index " +
                            std::to_string(n) + " (holds " + std::to_string(b.c.size()) + ")");
  T acc{};
  for (std::size_t k = 0; k <= n; ++k) acc += a.c[k] * b.c[n - k];
  return acc;
}

// Horner evaluation in u = s^2, multiplied by s.
inline double eval_odd_series(const OddSeriesD& f, double s) {
  if (f.c.empty()) return 0.0;
  const double u = s * s;
  double acc = f.c.back();
  for (std::size_t k = f.c.size() - 1; k-- > 0;) acc = acc * u + f.c[k];
  return acc * s;
}

// Termwise derivative sum (2n+1) c[n] s^(2n), evaluated by Horner in s^2.
inline double eval_odd_series_derivative(const OddSeriesD& f, double s) {
  if (f.c.empty()) return 0.0;
  const double u = s * s;
  const std::size_t N = f.c.size() - 1;
  double acc = double(2 * N + 1) * f.c[N];
  for (std::size_t k = N; k-- > 0;) acc = acc * u + double(2 * k + 1) * f.c[k];
  return acc;
}

// Radius-of-convergence estimate for the odd series, from the coefficient tail.
//
// Estimator: over the tail window [size/2, size-1], take the geometric mean of
// the per-gap radius estimates (|c_a|/|c_b|)^(1/(2(b-a))) between consecutive
// nonzero coefficients, weighted by gap length. That product telescopes, so the
// implementation reduces to the two-point form using the first and last nonzero
// tail coefficients. Gap-aware on purpose: series with interleaved zero
// coefficients (conjugate singularity pairs) are handled without special cases.
// Needs at least 16 coefficients; an all-zero (or single-entry) tail means the
// series terminates, which is reported as an infinite radius.
inline double root_test_radius(const OddSeriesD& f) {
  if (f.c.size() < 16)
    throw std::invalid_argument("root_test_radius: needs at least 16 coefficients, got " +
                                std::to_string(f.c.size()));
  const std::size_t lo = f.c.size() / 2;
  std::size_t a = 0, b = 0;
  bool found = false;
  for (std::size_t i = lo; i < f.c.size(); ++i) {
    if (f.c[i] != 0.0) {
      if (!found) {
        a = i;
        found = true;
      }
      b = i;
    }
  }
  if (!found || a == b) return std::numeric_limits<double>::infinity();
  return std::pow(std::abs(f.c[a]) / std::abs(f.c[b]), 1.0 / double(2 * (b - a)));
}

// Evaluation guarded by the estimated radius; requires the estimate to be
// available (>= 16 coefficients, see root_test_radius).
inline double eval_odd_series_guarded(const OddSeriesD& f, double s) {
  const double radius = root_test_radius(f);
  if (std::abs(s) > 0.95 * radius)
    throw std::domain_error("eval_odd_series_guarded: |s| = " + std::to_string(std::abs(s)) +
                            " exceeds 0.95 x estimated radius " + std::to_string(radius));
  return eval_odd_series(f, s);
}

}  // namespace qbsde
