#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "qbsde/example1.hpp"
#include "qbsde/example2.hpp"
#include "qbsde/exact.hpp"

using namespace qbsde;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("tan-type coefficient table, exact values") {
  const Ex1CoefficientsExact c = ex1_coefficients_exact(5);
  const std::vector<Rational> expected = {
      Rational(1),        Rational(2, 3),     Rational(8, 15),
      Rational(136, 315), Rational(992, 2835), Rational(44224, 155925)};
  REQUIRE(c.alpha.c.size() == 6);
  for (std::size_t n = 0; n < 6; ++n) {
    CAPTURE(n);
    REQUIRE(c.alpha.c[n] == expected[n]);
    // tanh-type entries alternate in sign against the tan-type ones
    const Rational want_beta = (n % 2 == 0) ? expected[n] : -expected[n];
    REQUIRE(c.beta.c[n] == want_beta);
  }
}

TEST_CASE("float table agrees with the exact one") {
  const Ex1CoefficientsExact ce = ex1_coefficients_exact(30);
  const Ex1Coefficients cf = ex1_coefficients(30);
  for (std::size_t n = 0; n <= 30; ++n) {
    CAPTURE(n);
    REQUIRE(cf.alpha.c[n] == Approx(ce.alpha.c[n].convert_to<double>()).epsilon(1e-14));
    REQUIRE(cf.beta.c[n] == Approx(ce.beta.c[n].convert_to<double>()).epsilon(1e-14));
  }
}

TEST_CASE("closed forms at reference points") {
  const struct {
    double s, a, b;
  } ref[] = {
      {0.1, 0.1006720435273744, 0.099338623839161878},
      {0.3, 0.31939785213917974, 0.28320799618736179},
      {0.5, 0.60423012106863576, 0.43052858579027382},
  };
  for (const auto& r : ref) {
    CAPTURE(r.s);
    const Ex1Closed cl = ex1_closed(r.s);
    REQUIRE(cl.alpha == Approx(r.a).margin(1e-15));
    REQUIRE(cl.beta == Approx(r.b).margin(1e-15));
  }
  REQUIRE(blowup_horizon() == Approx(1.1107207345395916).margin(3e-16));
  // refusal is a pole guard, not a domain cut: past the pole is legal again
  REQUIRE_THROWS_AS(ex1_closed(blowup_horizon()), std::domain_error);
  REQUIRE_NOTHROW(ex1_closed(1.12));
}

TEST_CASE("series evaluation tracks the closed forms") {
  const Ex1Coefficients c = ex1_coefficients(30);
  for (double s : {0.1, 0.3, 0.5}) {
    CAPTURE(s);
    const Ex1Closed cl = ex1_closed(s);
    REQUIRE(eval_odd_series(c.alpha, s) == Approx(cl.alpha).margin(1e-10));
    REQUIRE(eval_odd_series(c.beta, s) == Approx(cl.beta).margin(1e-10));
  }
}

TEST_CASE("first-order equation residuals under truncation") {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(0.5 * i / 50.0);
  const Ex1RiccatiResidual r20 = ex1_riccati_residual(20, grid);
  REQUIRE(r20.alpha_max < 1e-8);
  REQUIRE(r20.beta_max < 1e-8);
  const Ex1RiccatiResidual r10 = ex1_riccati_residual(10, grid);
  REQUIRE(r20.alpha_max < r10.alpha_max);  // deeper truncation, smaller residual

  std::vector<double> outside = {1.05};
  REQUIRE_THROWS_MATCHES(ex1_riccati_residual(20, outside), std::domain_error,
                         Catch::Matchers::MessageMatches(ContainsSubstring("safe radius")));
}

TEST_CASE("log-constant readings") {
  REQUIRE(validated_constant_reading() == ConstantReading::quotient);
  REQUIRE(ex1_constant(0.5, ConstantReading::product) ==
          Approx(-0.021266868507414453).margin(1e-15));
  REQUIRE(ex1_constant(0.5, ConstantReading::quotient) ==
          Approx(-0.2528481907157604).margin(1e-15));
  // default picks the validated reading
  REQUIRE(ex1_constant(0.5) == ex1_constant(0.5, ConstantReading::quotient));
  // the two readings differ by log cosh(sqrt2 T)
  const double gap = ex1_constant(0.5, ConstantReading::product) -
                     ex1_constant(0.5, ConstantReading::quotient);
  REQUIRE(gap == Approx(std::log(std::cosh(std::numbers::sqrt2 * 0.5))).margin(1e-15));
  REQUIRE_THROWS_MATCHES(ex1_constant(1.2), std::domain_error,
                         Catch::Matchers::MessageMatches(ContainsSubstring("horizon")));
}

TEST_CASE("coupled-family exact tables") {
  const Ex2CoefficientsExact c = ex2_coefficients_exact(5);
  const std::vector<Rational> ea = {Rational(0),        Rational(-2, 3),
                                    Rational(0),        Rational(136, 315),
                                    Rational(0),        Rational(-44224, 155925)};
  const std::vector<Rational> eb = {Rational(1),         Rational(0), Rational(-8, 15),
                                    Rational(0),         Rational(992, 2835),
                                    Rational(0)};
  for (std::size_t n = 0; n < 6; ++n) {
    CAPTURE(n);
    REQUIRE(c.alpha.c[n] == ea[n]);
    REQUIRE(c.beta.c[n] == eb[n]);
  }
}

TEST_CASE("coupled-family closed forms") {
  // complex route vs separated real forms
  for (double s : {0.0, 0.2, 0.7, 3.0, 9.7}) {
    CAPTURE(s);
    const std::complex<double> z = ex2_zeta(s);
    const Ex2Closed cl = ex2_closed(s);
    REQUIRE(z.real() == Approx(cl.alpha).margin(1e-13));
    REQUIRE(z.imag() == Approx(cl.beta).margin(1e-13));
  }

  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(10.0 * i / 200.0);
  REQUIRE(ex2_zeta_residual(grid) < 1e-13);
  REQUIRE(ex2_denominator_min(10.0, 1e-3) >= 1.0);  // minimum sits at s = 0

  const Ex2Coefficients c = ex2_coefficients(15);
  for (double s : {0.1, 0.3, 0.5}) {
    CAPTURE(s);
    const Ex2Closed cl = ex2_closed(s);
    REQUIRE(eval_odd_series(c.alpha, s) == Approx(cl.alpha).margin(1e-8));
    REQUIRE(eval_odd_series(c.beta, s) == Approx(cl.beta).margin(1e-8));
  }
}
