#include <doctest.h>

#include <cmath>

#include "metabound/dataset.hpp"
#include "oracles.hpp"

TEST_CASE("Monte-Carlo Bayes error agrees with the closed form") {
  for (double delta : {0.0, 1.0, 3.0}) {
    const auto mc = oracle::gaussian_ber(3, delta, 0.5, 200000, 11);
    CHECK(std::abs(mc.mean - metabound::true_gaussian_ber(delta, 0.5)) <= 4.0 * mc.se + 1e-12);
  }
}

TEST_CASE("Monte-Carlo Chernoff coefficient agrees with the closed form") {
  for (double alpha : {0.2, 0.5, 0.8}) {
    const auto mc = oracle::gaussian_chernoff_coefficient(2, 1.5, alpha, 200000, 12);
    CHECK(std::abs(mc.mean - oracle::closed_form_chernoff_coefficient(1.5, alpha)) <= 4.0 * mc.se);
  }
}

TEST_CASE("D~ oracle endpoints and ordering") {
  CHECK(oracle::gaussian_dtilde(2, 0.0, 0.5, 10000, 1).mean == doctest::Approx(0.0).epsilon(1e-12));
  const auto d = oracle::gaussian_dtilde(2, 2.0, 0.5, 100000, 1);
  const double ber = metabound::true_gaussian_ber(2.0, 0.5);
  // 1/2 - sqrt(D~)/2 <= BER <= 1/2 - D~/2
  CHECK(0.5 - 0.5 * std::sqrt(d.mean) <= ber + 1e-3);
  CHECK(ber <= 0.5 - 0.5 * d.mean + 1e-3);
}

TEST_CASE("G_alpha oracle sits just below the Bayes error") {
  const auto g = oracle::gaussian_galpha(2, 2.0, 0.5, 500.0, 200000, 2);
  const double ber = metabound::true_gaussian_ber(2.0, 0.5);
  CHECK(g.mean <= ber + 4.0 * g.se);
  CHECK(g.mean >= ber - 0.01);
}

TEST_CASE("exhaustive MST on a path") {
  const auto w = [](std::size_t i, std::size_t j) { return std::abs(static_cast<double>(i) - static_cast<double>(j)); };
  CHECK(oracle::exhaustive_mst_weight(5, w) == doctest::Approx(4.0));
}

TEST_CASE("brute-force k-th distance") {
  const std::vector<std::vector<double>> refs = {{0.0}, {2.0}, {5.0}};
  const std::vector<double> q = {1.0};
  CHECK(oracle::brute_force_kth(refs, q, 1, 99) == 1.0);
  CHECK(oracle::brute_force_kth(refs, q, 3, 99) == 4.0);
  CHECK(oracle::brute_force_kth(refs, q, 2, 0) == 4.0);
}
