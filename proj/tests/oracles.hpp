#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the estimator code paths it is used to check.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

/// Monte-Carlo integral of min(q1 f1, q2 f2) for N(0, I) vs N(delta e1, I)
/// in d dimensions, sampling x from the mixture.
McEstimate gaussian_ber(std::size_t d, double delta, double q1, std::size_t draws, std::uint64_t seed);

/// 1 - 4 q1 q2 integral f1 f2 / (q1 f1 + q2 f2), same setting.
McEstimate gaussian_dtilde(std::size_t d, double delta, double q1, std::size_t draws, std::uint64_t seed);

/// integral f1^alpha f2^(1-alpha), sampled under f2.
McEstimate gaussian_chernoff_coefficient(std::size_t d, double delta, double alpha, std::size_t draws,
                                         std::uint64_t seed);

/// (1/alpha) integral g_alpha p, the G_alpha lower bound, sampled under p.
McEstimate gaussian_galpha(std::size_t d, double delta, double q1, double alpha, std::size_t draws,
                           std::uint64_t seed);

/// exp(-alpha (1 - alpha) delta^2 / 2).
double closed_form_chernoff_coefficient(double delta, double alpha);

/// k-th smallest distance by full sort; `exclude` < refs.size() skips that row.
double brute_force_kth(const std::vector<std::vector<double>>& refs, std::span<const double> query, std::size_t k,
                       std::size_t exclude);

/// Minimum spanning-tree weight by enumerating every labeled tree (Pruefer
/// sequences). n <= 8.
double exhaustive_mst_weight(std::size_t n, const std::function<double(std::size_t, std::size_t)>& weight);

/// Minimum-norm solution of A w = b by Gaussian elimination on A A^T.
std::vector<double> min_norm_solution(const std::vector<std::vector<double>>& a, const std::vector<double>& b);

}  // namespace oracle
