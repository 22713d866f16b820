#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "qbsde/catalan.hpp"

namespace qbsde {

// Parameters of the geometric majorant a_n (1+|beta|)^n L0^(n+1) that
// dominates the series levels, with a_n the Catalan numbers and L0 the norm
// bound on the zeroth level (L0 = gamma * |A|_omega for the shipped setups).
struct MajorantParams {
  double beta = 0.0;
  double L0 = 0.0;
  double A_omega = 0.0;
  double gamma = 0.0;
};

inline double majorant_term(std::size_t n, const MajorantParams& p) {
  const double an = catalan_closed(n).convert_to<double>();
  return an * std::pow(1.0 + std::abs(p.beta), double(n)) * std::pow(p.L0, double(n + 1));
}

// Largest coupling for which the majorant stays summable:
// gamma < 1 / (4 |A|_omega (1+|beta|)).
inline double convergence_threshold(double A_omega, double beta) {
  if (A_omega == 0.0)
    throw std::domain_error(
        "convergence_threshold: undefined for |A|_omega = 0 (any gamma admissible)");
  return 1.0 / (4.0 * std::abs(A_omega) * (1.0 + std::abs(beta)));
}

// Successive-term ratio of the majorant; < 1 for all n once the coupling sits
// below the threshold, since the Catalan growth ratio 2(2n+1)/(n+2) < 4.
inline double majorant_ratio(std::size_t n, const MajorantParams& p) {
  const double an = catalan_closed(n).convert_to<double>();
  const double an1 = catalan_closed(n + 1).convert_to<double>();
  return (an1 / an) * (1.0 + std::abs(p.beta)) * p.L0;
}

}  // namespace qbsde
