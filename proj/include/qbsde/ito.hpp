#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "qbsde/paths.hpp"

namespace qbsde {

enum class Driver { w, w_perp };

// Left-endpoint stochastic integral along one path:
//   sum_i f(t_i, W_i, Wperp_i) (X_{i+1} - X_i),  X the chosen driver.
// Left endpoints only; evaluating f anywhere else inside the step would
// drift the sum toward the Stratonovich reading.
template <typename F>
double ito_integral_path(std::span<const double> w, std::span<const double> wp, double dt,
                         Driver driver, F&& f) {
  const std::span<const double> x = driver == Driver::w ? w : wp;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    acc += f(double(i) * dt, w[i], wp[i]) * (x[i + 1] - x[i]);
  return acc;
}

// The matching discrete quadratic variation sum_i f(t_i,...)^2 dt.
template <typename F>
double ito_quadratic_variation_path(std::span<const double> w, std::span<const double> wp,
                                    double dt, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double v = f(double(i) * dt, w[i], wp[i]);
    acc += v * v;
  }
  return acc * dt;
}

// Bundle-level integral: one value per path.
template <typename F>
std::vector<double> ito_integral(const PathBundle& b, Driver driver, F&& f) {
  std::vector<double> out(b.n_paths);
  for (std::size_t p = 0; p < b.n_paths; ++p)
    out[p] = ito_integral_path(b.path_w(p), b.path_wp(p), b.dt, driver, f);
  return out;
}

// exp(M_T - QV_T / 2) per path; the exponential of a local martingale with
// its compensator.
inline std::vector<double> stochastic_exponential(std::span<const double> m_terminal,
                                                  std::span<const double> qv_terminal) {
  if (m_terminal.size() != qv_terminal.size())
    throw std::invalid_argument("stochastic_exponential: mismatched path counts");
  std::vector<double> out(m_terminal.size());
  for (std::size_t p = 0; p < out.size(); ++p)
    out[p] = std::exp(m_terminal[p] - 0.5 * qv_terminal[p]);
  return out;
}

}  // namespace qbsde
