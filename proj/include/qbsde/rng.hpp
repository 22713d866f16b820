#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace qbsde {

// Philox 4x32-10 counter-based generator. A block cipher over a 128-bit
// counter under a 64-bit key: every (counter, key) pair yields its 128 output
// bits independently, so any path/step of a simulation can be regenerated in
// isolation and parallel sweeps agree with serial ones bit for bit.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                                  std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0;; ++round) {
    const std::uint64_t p0 = std::uint64_t(M0) * c[0];
    const std::uint64_t p1 = std::uint64_t(M1) * c[2];
    c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
         std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
    if (round == 9) break;
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

// 53-bit uniform on (0, 1] from two 32-bit words; never returns 0, so it is
// safe under a logarithm.
inline double uniform_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t(hi) << 32) | lo;
  return double((bits >> 11) + 1) * 0x1p-53;
}

struct NormalPair {
  double z0 = 0.0, z1 = 0.0;
};

// Standard Gaussian pair addressed by (seed, path, step, tag): one Philox
// block mapped through Box-Muller. The seed keys the cipher; the counter
// carries the coordinates, so streams never overlap across paths or steps.
inline NormalPair normal_pair(std::uint64_t seed, std::uint64_t path, std::uint32_t step,
                              std::uint32_t tag = 0) {
  const std::array<std::uint32_t, 4> out =
      philox4x32_10({step, std::uint32_t(path), std::uint32_t(path >> 32), tag},
                    {std::uint32_t(seed), std::uint32_t(seed >> 32)});
  const double u1 = uniform_open_closed(out[0], out[1]);
  const double u2 = uniform_open_closed(out[2], out[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace qbsde
