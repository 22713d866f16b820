#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qbsde/rng.hpp"
#include "qbsde/stats.hpp"

namespace qbsde {

struct PathSpec {
  double T = 1.0;
  std::size_t n_paths = 1;
  std::size_t n_steps = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("PathSpec: T must be positive");
    if (n_steps < 2) throw std::invalid_argument("PathSpec: needs n_steps >= 2");
    if (n_paths < 1) throw std::invalid_argument("PathSpec: needs n_paths >= 1");
  }
  double dt() const { return T / double(n_steps); }
};

// Fills one path's trajectory on the uniform time grid t_i = i dt,
// i = 0..n_steps; w and wp must hold n_steps+1 slots. The increment over
// [t_i, t_{i+1}] comes from the Philox block at (seed, path, step i).
inline void generate_path(const PathSpec& ps, std::size_t path, std::span<double> w,
                          std::span<double> wp) {
  const double sdt = std::sqrt(ps.dt());
  w[0] = 0.0;
  wp[0] = 0.0;
  for (std::size_t i = 0; i < ps.n_steps; ++i) {
    const NormalPair z = normal_pair(ps.seed, path, std::uint32_t(i));
    w[i + 1] = w[i] + sdt * z.z0;
    wp[i + 1] = wp[i] + sdt * z.z1;
  }
}

// Runs body(path, W, Wperp) for every path, regenerating trajectories on the
// fly instead of materializing them all. Threads split the path range; the
// body must write only to slots owned by its path index, which makes the
// result independent of the partitioning.
template <typename Body>
void for_each_path(const PathSpec& ps, unsigned n_threads, Body&& body) {
  ps.validate();
  auto worker = [&ps, &body](std::size_t lo, std::size_t hi) {
    std::vector<double> w(ps.n_steps + 1), wp(ps.n_steps + 1);
    for (std::size_t p = lo; p < hi; ++p) {
      generate_path(ps, p, w, wp);
      body(p, std::span<const double>(w), std::span<const double>(wp));
    }
  };
  if (n_threads <= 1 || ps.n_paths < 2 * std::size_t(n_threads)) {
    worker(0, ps.n_paths);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  const std::size_t chunk = (ps.n_paths + n_threads - 1) / n_threads;
  for (unsigned t = 0; t < n_threads; ++t) {
    const std::size_t lo = std::min(ps.n_paths, std::size_t(t) * chunk);
    const std::size_t hi = std::min(ps.n_paths, lo + chunk);
    if (lo < hi) pool.emplace_back(worker, lo, hi);
  }
  for (auto& th : pool) th.join();
}

// Fully materialized two-dimensional Brownian sample. Convenient for the
// integral operations below the memory guard; the streaming interface above
// covers everything larger.
struct PathBundle {
  double T = 0.0;
  double dt = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::uint64_t seed = 0;
  std::vector<double> w, wp;  // [path * (n_steps + 1) + i]

  std::span<const double> path_w(std::size_t p) const {
    return {w.data() + p * (n_steps + 1), n_steps + 1};
  }
  std::span<const double> path_wp(std::size_t p) const {
    return {wp.data() + p * (n_steps + 1), n_steps + 1};
  }
};

inline PathBundle sample_paths(const PathSpec& ps, std::size_t memory_limit_bytes = std::size_t(1)
                                                                                    << 30) {
  ps.validate();
  const std::size_t values = ps.n_paths * (ps.n_steps + 1);
  if (values * 2 * sizeof(double) > memory_limit_bytes)
    throw std::length_error(
        "sample_paths: bundle of " + std::to_string(values * 2 * sizeof(double)) +
        " bytes exceeds the limit of " + std::to_string(memory_limit_bytes) +
        "; stream with for_each_path instead");
  PathBundle b;
  b.T = ps.T;
  b.dt = ps.dt();
  b.n_paths = ps.n_paths;
  b.n_steps = ps.n_steps;
  b.seed = ps.seed;
  b.w.resize(values);
  b.wp.resize(values);
  const std::size_t stride = ps.n_steps + 1;
  for (std::size_t p = 0; p < ps.n_paths; ++p)
    generate_path(ps, p, {b.w.data() + p * stride, stride}, {b.wp.data() + p * stride, stride});
  return b;
}

// Sanity gate on the sampled increments: normalized by sqrt(dt) they should
// have mean within 5/sqrt(count) of 0 and variance within 5% of 1. A cheap
// corruption check, not a distributional test.
struct IncrementStats {
  double mean_w = 0.0, mean_wp = 0.0;
  double var_w = 0.0, var_wp = 0.0;
  std::size_t count = 0;
  bool ok = false;
};

inline IncrementStats increment_stats(const PathBundle& b) {
  IncrementStats s;
  s.count = b.n_paths * b.n_steps;
  const double inv_sdt = 1.0 / std::sqrt(b.dt);
  KahanSum mw, mwp, qw, qwp;
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    const auto w = b.path_w(p);
    const auto wp = b.path_wp(p);
    for (std::size_t i = 0; i < b.n_steps; ++i) {
      const double dw = (w[i + 1] - w[i]) * inv_sdt;
      const double dwp = (wp[i + 1] - wp[i]) * inv_sdt;
      mw.add(dw);
      mwp.add(dwp);
      qw.add(dw * dw);
      qwp.add(dwp * dwp);
    }
  }
  const double n = double(s.count);
  s.mean_w = mw.value() / n;
  s.mean_wp = mwp.value() / n;
  s.var_w = qw.value() / n - s.mean_w * s.mean_w;
  s.var_wp = qwp.value() / n - s.mean_wp * s.mean_wp;
  const double mean_gate = 5.0 / std::sqrt(n);
  s.ok = std::abs(s.mean_w) <= mean_gate && std::abs(s.mean_wp) <= mean_gate &&
         std::abs(s.var_w - 1.0) <= 0.05 && std::abs(s.var_wp - 1.0) <= 0.05;
  return s;
}

}  // namespace qbsde
