#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace qbsde {

// Neumaier-compensated accumulator. Summation order is fixed by the caller,
// which keeps reductions bit-identical regardless of how the values were
// produced (thread partitioning must never change the reduction order).
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

struct SampleStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stdev = 0.0;    // unbiased (n-1)
  double max_abs = 0.0;
  double se() const { return n > 1 ? stdev / std::sqrt(double(n)) : 0.0; }
};

// Two-pass mean/std with compensated sums; deterministic for a fixed ordering.
inline SampleStats sample_stats(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("sample_stats: empty sample");
  SampleStats st;
  st.n = xs.size();
  st.mean = compensated_sum(xs) / double(xs.size());
  KahanSum sq;
  for (double x : xs) {
    const double d = x - st.mean;
    sq.add(d * d);
    st.max_abs = std::max(st.max_abs, std::abs(x));
  }
  st.stdev = xs.size() > 1 ? std::sqrt(sq.value() / double(xs.size() - 1)) : 0.0;
  return st;
}

}  // namespace qbsde
