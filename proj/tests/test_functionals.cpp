#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "metabound/error.hpp"
#include "metabound/functionals.hpp"

using namespace metabound;

TEST_CASE("phi values at hand-computed points") {
  CHECK(phi_eval(FunctionalSpec::chernoff(0.5), 4.0) == doctest::Approx(2.0));
  CHECK(phi_eval(FunctionalSpec::chernoff(0.25), 16.0) == doctest::Approx(2.0));
  CHECK(phi_eval(FunctionalSpec::dtilde_rational(0.5), 1.0) == doctest::Approx(1.0));
  CHECK(phi_eval(FunctionalSpec::dtilde_rational(0.5), 3.0) == doctest::Approx(1.5));
  CHECK(phi_eval(FunctionalSpec::dtilde_variational(0.5), 1.0) == doctest::Approx(0.0));
  CHECK(phi_eval(FunctionalSpec::dtilde_variational(0.5), 3.0) == doctest::Approx(0.5));
}

TEST_CASE("G_alpha at t = 1 with equal priors") {
  // 1/2 - (log 2 - log(1 + e^-a)) / a, and e^-500 vanishes in double precision.
  const auto spec = FunctionalSpec::galpha(500.0, 0.5);
  const double phi = phi_eval(spec, 1.0);
  CHECK(bound_from_dphi(spec, phi) == doctest::Approx(0.5 - std::log(2.0) / 500.0).epsilon(1e-12));
  CHECK(bound_from_dphi(spec, phi) == doctest::Approx(0.498614).epsilon(1e-6));
}

TEST_CASE("G_alpha is finite for extreme ratios and approaches the posterior minimum") {
  const auto spec = FunctionalSpec::galpha(500.0, 0.3);
  for (double t : {1e-300, 1e-20, 0.5, 1.0, 7.0, 1e20, 1e300}) {
    const double v = phi_eval(spec, t);
    CHECK(std::isfinite(v));
    const double m = 0.3 * t + 0.7;
    const double hard_min = std::min(0.3 * t, 0.7);
    CHECK(v / 500.0 >= hard_min - 1e-12 * m);
    CHECK(v / 500.0 <= hard_min + std::log(2.0) / 500.0 * m + 1e-12 * m);
  }
}

TEST_CASE("the rational and variational forms describe the same divergence") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> logt(-10.0, 10.0);
  std::uniform_real_distribution<double> prior(0.05, 0.95);
  for (int i = 0; i < 10000; ++i) {
    const double t = std::exp(logt(rng));
    const double q1 = prior(rng);
    const double q2 = 1.0 - q1;
    const double rational = phi_eval(FunctionalSpec::dtilde_rational(q1), t);
    const double variational = phi_eval(FunctionalSpec::dtilde_variational(q1), t);
    // (q1 t + q2) - 4 q1 q2 t / (q1 t + q2) = (q1 t - q2)^2 / (q1 t + q2).
    CHECK(std::abs((q1 * t + q2) - rational - variational) <= 1e-12 * (q1 * t + q2));
  }
}

TEST_CASE("post-processing maps") {
  const auto rational = FunctionalSpec::dtilde_rational(0.5);
  CHECK(bound_from_dphi(rational, 0.25) == doctest::Approx(0.75));
  CHECK(bound_from_dphi(FunctionalSpec::dtilde_variational(0.5), 0.25) == doctest::Approx(0.25));
  CHECK(bound_from_dphi(FunctionalSpec::chernoff(0.4), 0.8) == doctest::Approx(0.8));
  CHECK(bound_from_dphi(FunctionalSpec::galpha(10.0, 0.5), 3.0) == doctest::Approx(0.3));
}

TEST_CASE("invalid arguments") {
  CHECK_THROWS_AS(phi_eval(FunctionalSpec::chernoff(0.5), 0.0), Error);
  CHECK_THROWS_AS(phi_eval(FunctionalSpec::chernoff(0.5), -1.0), Error);
  CHECK_THROWS_AS(phi_eval(FunctionalSpec::chernoff(0.5), std::numeric_limits<double>::infinity()), Error);
  CHECK_THROWS_AS(FunctionalSpec::chernoff(0.0).validate(), Error);
  CHECK_THROWS_AS(FunctionalSpec::chernoff(1.0).validate(), Error);
  CHECK_THROWS_AS(FunctionalSpec::dtilde_rational(1.0).validate(), Error);
  CHECK_THROWS_AS(FunctionalSpec::galpha(-1.0, 0.5).validate(), Error);
}
