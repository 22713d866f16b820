#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qbsde/ito.hpp"
#include "qbsde/kl.hpp"
#include "qbsde/mc_checks.hpp"
#include "qbsde/paths.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/stats.hpp"

using namespace qbsde;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("counter block cipher known answers") {
  // Reference vectors for the 10-round 4x32 configuration.
  const std::array<std::uint32_t, 4> z{0, 0, 0, 0};
  REQUIRE(philox4x32_10(z, {0, 0}) ==
          std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  const std::array<std::uint32_t, 4> ff{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu};
  REQUIRE(philox4x32_10(ff, {0xffffffffu, 0xffffffffu}) ==
          std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

  const std::array<std::uint32_t, 4> pi_c{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u};
  REQUIRE(philox4x32_10(pi_c, {0xa4093822u, 0x299f31d0u}) ==
          std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniform mapping stays inside (0, 1]") {
  REQUIRE(uniform_open_closed(0, 0) > 0.0);
  REQUIRE(uniform_open_closed(0xffffffffu, 0xffffffffu) == 1.0);
  double mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto b = philox4x32_10({std::uint32_t(i), 0, 0, 0}, {13, 0});
    const double u = uniform_open_closed(b[0], b[1]);
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
    mean += u;
  }
  mean /= n;
  REQUIRE(mean == Approx(0.5).margin(0.005));
}

TEST_CASE("normal pairs are a pure function of their coordinates") {
  const NormalPair a = normal_pair(42, 7, 3);
  const NormalPair b = normal_pair(42, 7, 3);
  REQUIRE(a.z0 == b.z0);
  REQUIRE(a.z1 == b.z1);
  const NormalPair c = normal_pair(42, 7, 3, 1);
  REQUIRE(a.z0 != c.z0);
  const NormalPair d = normal_pair(43, 7, 3);
  REQUIRE(a.z0 != d.z0);
}

TEST_CASE("path container and increment gates") {
  PathSpec ps;
  ps.T = 1.0;
  ps.n_paths = 2000;
  ps.n_steps = 32;
  ps.seed = 5;
  const PathBundle b = sample_paths(ps);
  REQUIRE(b.n_paths == 2000);
  REQUIRE(b.path_w(0)[0] == 0.0);
  REQUIRE(b.path_wp(1999)[0] == 0.0);
  REQUIRE(b.path_w(3).size() == 33);

  const IncrementStats st = increment_stats(b);
  REQUIRE(st.ok);
  REQUIRE(std::abs(st.mean_w) <= 5.0 / std::sqrt(double(2000 * 32)));
  REQUIRE(std::abs(st.var_w - 1.0) <= 0.05);
  REQUIRE(std::abs(st.var_wp - 1.0) <= 0.05);

  PathSpec bad;
  bad.n_steps = 1;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  PathSpec big;
  big.n_paths = 1 << 20;
  big.n_steps = 1 << 16;
  REQUIRE_THROWS_MATCHES(sample_paths(big), std::length_error,
                         Catch::Matchers::MessageMatches(ContainsSubstring("for_each_path")));
}

TEST_CASE("increment gate flags degenerate bundles") {
  PathBundle b;
  b.T = 1.0;
  b.dt = 0.25;
  b.n_paths = 2;
  b.n_steps = 4;
  b.w = {0, 0.5, 1.0, 1.5, 2.0, 0, 0.5, 1.0, 1.5, 2.0};  // constant increments
  b.wp = b.w;
  REQUIRE_FALSE(increment_stats(b).ok);  // variance nowhere near dt
}

TEST_CASE("discrete integral identities hold path by path") {
  PathSpec ps;
  ps.T = 0.7;
  ps.n_paths = 5;
  ps.n_steps = 200;
  ps.seed = 11;
  const PathBundle b = sample_paths(ps);
  for (std::size_t p = 0; p < ps.n_paths; ++p) {
    const auto w = b.path_w(p), wp = b.path_wp(p);
    // sum W dW = (W_T^2 - sum dW^2) / 2, an algebraic identity of the sums
    const double lhs = ito_integral_path(w, wp, b.dt, Driver::w,
                                         [](double, double x, double) { return x; });
    double qv = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) qv += (w[i + 1] - w[i]) * (w[i + 1] - w[i]);
    REQUIRE(lhs == Approx(0.5 * (w.back() * w.back() - qv)).margin(1e-12));
    // constant integrand against the other driver telescopes
    const double tele = ito_integral_path(w, wp, b.dt, Driver::w_perp,
                                          [](double, double, double) { return 1.0; });
    REQUIRE(tele == Approx(wp.back()).margin(1e-12));
    // quadratic variation of a unit integrand is just T
    const double unit = ito_quadratic_variation_path(w, wp, b.dt,
                                                     [](double, double, double) { return 1.0; });
    REQUIRE(unit == Approx(0.7).margin(1e-12));
  }
}

TEST_CASE("compensated exponential has unit mean") {
  PathSpec ps;
  ps.T = 1.0;
  ps.n_paths = 20000;
  ps.n_steps = 500;
  ps.seed = 17;
  const PathBundle b = sample_paths(ps);
  for (double kappa : {0.5, 1.0}) {
    CAPTURE(kappa);
    const std::vector<double> m =
        ito_integral(b, Driver::w, [kappa](double, double, double) { return kappa; });
    std::vector<double> qv(b.n_paths, kappa * kappa * b.T);
    const std::vector<double> e = stochastic_exponential(m, qv);
    const SampleStats st = sample_stats(e);
    REQUIRE(std::abs(st.mean - 1.0) <= 5.0 * st.se());
  }
  std::vector<double> short_qv(3, 0.0);
  std::vector<double> m(4, 0.0);
  REQUIRE_THROWS_AS(stochastic_exponential(m, short_qv), std::invalid_argument);
}

TEST_CASE("eigenvalue table and eigenfunctions") {
  const KLExpansion kl = kl_expansion(4);
  REQUIRE(kl.lambda(1) == Approx(0.40528473456935109).margin(1e-15));
  REQUIRE(kl.lambda(2) == Approx(1.0 / (2.25 * std::numbers::pi * std::numbers::pi)).margin(1e-15));
  REQUIRE_THROWS_AS(kl.lambda(0), std::out_of_range);
  REQUIRE_THROWS_AS(kl.lambda(5), std::out_of_range);
  // e_n(0) = 0 and slope sqrt2 (n - 1/2) pi at the origin
  REQUIRE(kl.efunc(1, 0.0) == Approx(0.0).margin(1e-15));
  REQUIRE(kl.efunc(1, 1.0) == Approx(std::numbers::sqrt2).margin(1e-14));
  REQUIRE_THROWS_AS(kl_expansion(0), std::invalid_argument);
}

TEST_CASE("eigenvalue product against the closed form") {
  const struct {
    double T, closed;
  } ref[] = {{0.3, 1.0475127670729719}, {0.5, 1.1468941269961799}, {0.8, 1.5331733286061755}};
  for (const auto& r : ref) {
    CAPTURE(r.T);
    REQUIRE(exp_quadratic_closed_form(r.T) == Approx(r.closed).margin(1e-14));
    const KLProduct kp = kl_product_formula(r.T, 10000);
    REQUIRE(std::abs(kp.value - r.closed) <= 1.1e-5);
    REQUIRE(std::abs(kp.value - r.closed) <= kp.tail_bound);  // the bound is honest
    REQUIRE(kp.tail_bound < 1e-4);
  }
  // single mode, frozen
  REQUIRE(kl_product_formula(0.5, 1).value == Approx(1.1198849856111745).margin(1e-14));
  REQUIRE_THROWS_MATCHES(kl_product_formula(1.12, 10), std::domain_error,
                         Catch::Matchers::MessageMatches(ContainsSubstring("first factor")));
  REQUIRE_THROWS_AS(exp_quadratic_closed_form(1.12), std::domain_error);
}

TEST_CASE("basis orthogonality and eigen residuals") {
  const KLOrthogonality o = kl_orthogonality_check(8, 2000);
  REQUIRE(o.max_offdiag < 1e-12);
  REQUIRE(o.max_diag_deviation < 1e-12);
  REQUIRE(o.max_eigen_residual < 1e-8);
}

TEST_CASE("identity residual: quotient reading passes, product reading fails") {
  std::vector<double> res;
  const ResidualReport q =
      verify_exponential_equation_ex1(0.5, 4000, 300, 7, ConstantReading::quotient, 1, &res);
  REQUIRE(q.within_band);
  REQUIRE(q.reading == ConstantReading::quotient);
  REQUIRE(res.size() == 4000);
  REQUIRE(q.dt == Approx(0.5 / 300.0));
  // the discrete-time mean sits at +T dt exactly, up to sampling noise
  REQUIRE(std::abs(q.mean - 0.5 * q.dt) <= 4.0 * q.se);

  const ResidualReport p =
      verify_exponential_equation_ex1(0.5, 4000, 300, 7, ConstantReading::product);
  REQUIRE_FALSE(p.within_band);
  // the product reading misses by log cosh(sqrt2 T)
  REQUIRE(std::abs(p.mean - q.mean) ==
          Approx(std::log(std::cosh(std::numbers::sqrt2 * 0.5))).margin(1e-12));

  REQUIRE_THROWS_MATCHES(verify_exponential_equation_ex1(1.06, 10, 10, 1), std::domain_error,
                         Catch::Matchers::MessageMatches(ContainsSubstring("blow-up horizon")));
}

TEST_CASE("residuals are independent of the thread partition") {
  std::vector<double> r1, r3;
  verify_exponential_equation_ex1(0.5, 2000, 200, 11, ConstantReading::quotient, 1, &r1);
  verify_exponential_equation_ex1(0.5, 2000, 200, 11, ConstantReading::quotient, 3, &r3);
  REQUIRE(r1 == r3);
}

TEST_CASE("functional estimate against the closed form") {
  const ExpFunctionalEstimate e = estimate_exp_quadratic_functional(0.5, 20000, 400, 3);
  REQUIRE(e.within_4se);
  REQUIRE(e.closed_form == Approx(1.1468941269961799).margin(1e-14));
  REQUIRE(std::abs(e.estimate - e.closed_form) <= 4.0 * e.se);
  REQUIRE_THROWS_MATCHES(estimate_exp_quadratic_functional(1.05, 10, 10, 1), std::domain_error,
                         Catch::Matchers::MessageMatches(ContainsSubstring("blow-up horizon")));
}

TEST_CASE("conditional bracket: quadrature against frozen references") {
  REQUIRE(ex1_conditional_bracket(0.0, 1.0, 0.5, 30) ==
          Approx(0.058143825340111594).margin(1e-12));
  REQUIRE(ex1_conditional_bracket(0.1, 0.7, 0.5, 30) ==
          Approx(0.014325608113996751).margin(1e-12));
  // truncation order barely matters this deep inside the radius
  REQUIRE(ex1_conditional_bracket(0.0, 1.0, 0.5, 15) ==
          Approx(0.058143825340111594).margin(1e-9));
  // quadratic growth in the conditioning value
  const double b0 = ex1_conditional_bracket(0.0, 0.0, 0.5, 30);
  const double b2 = ex1_conditional_bracket(0.0, 2.0, 0.5, 30);
  const double b4 = ex1_conditional_bracket(0.0, 4.0, 0.5, 30);
  REQUIRE((b4 - b0) / (b2 - b0) == Approx(4.0).margin(1e-9));
  REQUIRE_THROWS_AS(ex1_conditional_bracket(0.5, 1.0, 0.5, 30), std::domain_error);
  REQUIRE_THROWS_AS(ex1_conditional_bracket(0.0, 1.0, 1.2, 30), std::domain_error);
}

TEST_CASE("conditional bracket: simulation agrees with quadrature") {
  const double quad = ex1_conditional_bracket(0.0, 1.0, 0.5, 30);
  const MCEstimate mc = ex1_conditional_bracket_mc(0.0, 1.0, 0.5, 30, 20000, 400, 12);
  REQUIRE(std::abs(mc.estimate - quad) <= 4.0 * mc.se + 5e-4);  // noise plus step bias
}
