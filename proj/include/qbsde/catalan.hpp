#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qbsde/exact.hpp"
#include "qbsde/odd_series.hpp"

namespace qbsde {

// Exact table of the quadratic-convolution sequence a_0 = 1,
// a_{n+1} = sum_{k=0}^{n} a_k a_{n-k} (the Catalan numbers).
struct CatalanTable {
  std::vector<Integer> a;
};

inline CatalanTable catalan_recurrence(std::size_t N) {
  CatalanTable t;
  t.a.reserve(N + 1);
  t.a.push_back(1);
  for (std::size_t n = 0; n < N; ++n) {
    Integer acc = 0;
    for (std::size_t k = 0; k <= n; ++k) acc += t.a[k] * t.a[n - k];
    t.a.push_back(acc);
  }
  return t;
}

// Closed form a_n = binom(2n+2, n+1) / (4n+2), evaluated exactly.
inline Integer catalan_closed(std::size_t n) {
  Integer binom = 1;
  for (std::size_t k = 1; k <= n + 1; ++k) {
    binom *= Integer(n + 1 + k);
    binom /= Integer(k);  // exact at every step: binom(n+1+k, k) is integral
  }
  const Integer d(4 * n + 2);
  if (binom % d != 0)
    throw std::logic_error("catalan_closed: non-integral division, n = " + std::to_string(n));
  return binom / d;
}

// Double view of the table, usable with the odd-series tooling (radius test).
inline OddSeriesD catalan_as_odd_series(const CatalanTable& t) {
  OddSeriesD f;
  f.c.reserve(t.a.size());
  for (const Integer& v : t.a) f.c.push_back(v.convert_to<double>());
  return f;
}

}  // namespace qbsde
