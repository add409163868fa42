// Acceptance checks: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "metabound/bounds.hpp"
#include "metabound/ensemble.hpp"
#include "metabound/experiment.hpp"
#include "metabound/functionals.hpp"
#include "metabound/mst.hpp"
#include "oracles.hpp"

using namespace metabound;

namespace {

constexpr std::size_t kOracleDraws = 1000000;
constexpr double kQ1 = 0.5;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(int id, const char* title, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& ex) {
    out = {false, std::string("exception: ") + ex.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > limit_seconds) {
    out.pass = false;
    out.detail += " [over time limit]";
  }
  if (!out.pass) ++failures;
  std::printf("%s criterion %d (%s): %s (%.1fs / %.0fs)\n", out.pass ? "PASS" : "FAIL", id, title,
              out.detail.c_str(), secs, limit_seconds);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

TwoSampleData gaussian(std::size_t d, double delta, std::size_t T, std::uint64_t stream, std::size_t trial) {
  return sample_gaussian_pair(GaussianSpec::separated(d, delta, T, derive_seed(stream, trial), kQ1));
}

double dtilde_of(const EnsembleEstimator& est, const FunctionalSpec& spec = FunctionalSpec::dtilde_rational(kQ1)) {
  return bound_from_dphi(spec, est.estimate(spec).value);
}

double true_dtilde(std::size_t d, double delta) {
  if (delta == 0.0) return 0.0;
  return oracle::gaussian_dtilde(d, delta, kQ1, kOracleDraws, 1000 + static_cast<std::uint64_t>(delta * 10)).mean;
}

// Shared by the invariant suite: every sandwich produced anywhere must be ordered.
std::size_t sandwich_checks = 0;
std::size_t sandwich_violations = 0;

SandwichBounds sandwich(double dtilde) {
  const auto b = dtilde_bounds(dtilde);
  ++sandwich_checks;
  if (!(b.lower <= b.upper) || b.lower < 0.0 || b.upper > 0.5) ++sandwich_violations;
  return b;
}

Outcome weight_solver() {
  Outcome out;
  const auto a = solve_weights({1.0, 4.0}, 2, WeightMode::ExactNull).w;
  const auto b = solve_weights({1.0, 4.0, 9.0}, 2, WeightMode::ExactNull).w;
  const double err_a = std::max(std::abs(a[0] - 2.0), std::abs(a[1] + 1.0));
  const double err_b = std::max({std::abs(b[0] - 4.0 / 3.0), std::abs(b[1] - 1.0 / 3.0), std::abs(b[2] + 2.0 / 3.0)});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rep % 5;
    // Jittered even grid on [0.3, 3]: one random point in the middle half of each cell.
    std::vector<double> ell(d + 2);
    const double step = 2.7 / static_cast<double>(ell.size());
    for (std::size_t i = 0; i < ell.size(); ++i) ell[i] = 0.3 + step * (static_cast<double>(i) + 0.25 + 0.5 * jitter(rng));
    for (double r : solve_weights(ell, d, WeightMode::ExactNull).constraint_residuals) worst = std::max(worst, r);
  }
  out.pass = err_a <= 1e-10 && err_b <= 1e-10 && worst <= 1e-9;
  out.detail = "err{1,4}=" + fmt("%.2e", err_a) + " err{1,4,9}=" + fmt("%.2e", err_b) +
               " max residual=" + fmt("%.2e", worst);
  return out;
}

Outcome identity_case() {
  std::vector<double> dt, ch;
  const auto grid = default_alpha_grid();
  for (std::size_t t = 0; t < 20; ++t) {
    const EnsembleEstimator est(gaussian(5, 0.0, 1000, 2, t), {});
    dt.push_back(dtilde_of(est));
    sandwich(dt.back());
    ch.push_back(chernoff_upper_bound(est, kQ1, grid).bound);
  }
  Outcome out;
  out.pass = std::abs(mean(dt)) <= 0.05 && std::abs(mean(ch) - 0.5) <= 0.05;
  out.detail = "mean D~=" + fmt("%.4f", mean(dt)) + " mean Chernoff=" + fmt("%.4f", mean(ch));
  return out;
}

// D~ estimates for (delta, T) over `trials`, rational and variational forms.
struct DtildeRuns {
  std::vector<double> rational;
  std::vector<double> variational;
};

DtildeRuns dtilde_runs(std::size_t d, double delta, std::size_t T, std::size_t trials, std::uint64_t stream) {
  DtildeRuns runs;
  for (std::size_t t = 0; t < trials; ++t) {
    const EnsembleEstimator est(gaussian(d, delta, T, stream, t), {});
    runs.rational.push_back(dtilde_of(est));
    runs.variational.push_back(dtilde_of(est, FunctionalSpec::dtilde_variational(kQ1)));
  }
  return runs;
}

std::vector<double> lower_bounds(const std::vector<double>& dtildes) {
  std::vector<double> out;
  for (double v : dtildes) out.push_back(sandwich(v).lower);
  return out;
}

DtildeRuns delta2_runs;  // reused by the bad-form check

Outcome dtilde_tracking() {
  Outcome out;
  for (double delta : {1.0, 2.0, 3.0, 4.0}) {
    const double target = 0.5 - 0.5 * std::sqrt(true_dtilde(5, delta));
    const auto big = dtilde_runs(5, delta, 1000, 50, 30 + static_cast<std::uint64_t>(delta));
    const auto small = dtilde_runs(5, delta, 100, 50, 40 + static_cast<std::uint64_t>(delta));
    if (delta == 2.0) delta2_runs = big;
    const auto lb_big = lower_bounds(big.rational);
    const auto lb_small = lower_bounds(small.rational);
    const double err = mean(lb_big) - target;
    const bool ok = std::abs(err) <= 0.05 && sd(lb_small) > sd(lb_big);
    out.pass = out.pass && ok;
    out.detail += fmt("D=%.0f:", delta) + fmt(" lower=%.4f", mean(lb_big)) + fmt(" oracle=%.4f", target) +
                  fmt(" sd100=%.4f", sd(lb_small)) + fmt(" sd1000=%.4f; ", sd(lb_big));
  }
  return out;
}

Outcome estimator_agreement() {
  std::vector<double> diffs;
  for (std::size_t t = 0; t < 30; ++t) {
    const auto data = gaussian(5, 2.0, 2000, 4, t);
    const EnsembleEstimator est(data, {});
    diffs.push_back(std::abs(dtilde_of(est) - hp_dtilde_estimate(data)));
  }
  Outcome out;
  out.pass = mean(diffs) <= 0.05;
  out.detail = "mean |knn - mst|=" + fmt("%.4f", mean(diffs));
  return out;
}

Outcome galpha_tightness() {
  const double ber = true_gaussian_ber(4.0, kQ1);
  std::vector<double> g;
  for (std::size_t t = 0; t < 10; ++t) {
    const EnsembleEstimator est(gaussian(5, 4.0, 5000, 5, t), {});
    g.push_back(galpha_lower_bound(est, kQ1, 500.0).value);
  }
  const double worst = *std::max_element(g.begin(), g.end());
  Outcome out;
  out.pass = std::abs(mean(g) - ber) <= 0.02 && worst <= ber + 0.01;
  out.detail = "mean G=" + fmt("%.5f", mean(g)) + " max G=" + fmt("%.5f", worst) + " BER=" + fmt("%.5f", ber);
  return out;
}

Outcome bad_form() {
  const double truth = true_dtilde(5, 2.0);
  double err_r = 0.0, err_v = 0.0;
  for (std::size_t t = 0; t < delta2_runs.rational.size(); ++t) {
    err_r += std::abs(delta2_runs.rational[t] - truth);
    err_v += std::abs(delta2_runs.variational[t] - truth);
  }
  const double n = static_cast<double>(delta2_runs.rational.size());
  Outcome out;
  out.pass = n > 0 && err_v / n > err_r / n;
  out.detail = "mean |variational - oracle|=" + fmt("%.4f", err_v / n) +
               " mean |rational - oracle|=" + fmt("%.4f", err_r / n);
  return out;
}

Outcome mse_decay() {
  const double truth = true_dtilde(3, 2.0);
  const auto spec = FunctionalSpec::dtilde_rational(kQ1);
  auto mse_at = [&](std::size_t T, std::vector<double>* base_mse) {
    double mse = 0.0;
    for (std::size_t t = 0; t < 50; ++t) {
      const EnsembleEstimator est(gaussian(3, 2.0, T, 7 + T, t), {});
      const auto res = est.estimate(spec);
      const double e = bound_from_dphi(spec, res.value) - truth;
      mse += e * e / 50.0;
      if (base_mse) {
        base_mse->resize(res.base_values.size(), 0.0);
        for (std::size_t s = 0; s < res.base_values.size(); ++s) {
          const double b = bound_from_dphi(spec, res.base_values[s]) - truth;
          (*base_mse)[s] += b * b / 50.0;
        }
      }
    }
    return mse;
  };
  std::vector<double> base;
  const double small = mse_at(500, nullptr);
  const double large = mse_at(2000, &base);
  const double best = *std::min_element(base.begin(), base.end());
  Outcome out;
  out.pass = large < small && large <= 1.5 * best;
  out.detail = "MSE500=" + fmt("%.3e", small) + " MSE2000=" + fmt("%.3e", large) + " best base=" + fmt("%.3e", best);
  return out;
}

DistanceData line(const std::vector<double>& x, const std::vector<int>& labels) {
  const std::size_t n = x.size();
  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = std::abs(x[i] - x[j]);
  return make_distance_data(n, dist, labels, std::nullopt);
}

Outcome mst_correctness() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 7;
    std::vector<double> pts(2 * n);
    for (auto& v : pts) v = u(rng);
    const auto w = [&](std::size_t i, std::size_t j) { return std::hypot(pts[2 * i] - pts[2 * j], pts[2 * i + 1] - pts[2 * j + 1]); };
    const auto mst = minimum_spanning_tree(n, w, {1, 2, 1, 2, 1, 2, 1});
    if (std::abs(mst.total_weight - oracle::exhaustive_mst_weight(n, w)) > 1e-12) ++mismatches;
  }
  const double separated = hp_dtilde_estimate(line({0.0, 1.0, 10.0, 11.0}, {1, 1, 2, 2}));
  const auto alternating = line({0.0, 2.0, 4.0, 6.0}, {1, 2, 1, 2});
  const auto r_alt = minimum_spanning_tree(alternating).cross_count;
  const double alt = hp_dtilde_estimate(alternating);
  Outcome out;
  out.pass = mismatches == 0 && separated == 0.5 && r_alt == 3 && alt == 0.0;
  out.detail = "mismatches=" + std::to_string(mismatches) + " separated=" + fmt("%.17g", separated) +
               " alternating R=" + std::to_string(r_alt) + " D~=" + fmt("%.17g", alt);
  return out;
}

Outcome invariants() {
  Outcome out;
  // Scale invariance.
  double drift = 0.0;
  for (std::size_t t = 0; t < 3; ++t) {
    const auto data = gaussian(4, 1.5, 300, 9, t);
    TwoSampleData scaled = data;
    for (auto* set : {&scaled.f1, &scaled.f2})
      for (std::size_t i = 0; i < set->size(); ++i)
        for (auto& v : (*set)[i]) v *= 123.25;
    const EnsembleEstimator a(data, {});
    const EnsembleEstimator b(scaled, {});
    for (const auto& spec : {FunctionalSpec::dtilde_rational(kQ1), FunctionalSpec::chernoff(0.3),
                             FunctionalSpec::galpha(500.0, kQ1)})
      drift = std::max(drift, std::abs(a.estimate(spec).value - b.estimate(spec).value));
  }
  // Bound ranges and ordering on full reports.
  std::size_t out_of_range = 0;
  for (double delta : {0.0, 1.0, 3.0})
    for (std::size_t t = 0; t < 3; ++t) {
      const auto report = estimate_all_bounds(gaussian(3, delta, 200, 10, t), {});
      for (const auto& e : report.entries)
        if (e.error || !(e.estimate >= 0.0 && e.estimate <= 0.5)) ++out_of_range;
      for (const char* est : {"knn-ensemble", "mst"})
        if (report.find("dtilde_lower", est)->estimate > report.find("dtilde_upper", est)->estimate)
          ++sandwich_violations;
    }
  // phi identity on a t-grid.
  double phi_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double t = std::exp(-12.0 + 24.0 * i / 9999.0);
    for (double q1 : {0.5, 0.2}) {
      const double lhs = phi_eval(FunctionalSpec::dtilde_variational(q1), t) + phi_eval(FunctionalSpec::dtilde_rational(q1), t);
      phi_err = std::max(phi_err, std::abs(lhs - (q1 * t + 1.0 - q1)) / std::max(1.0, q1 * t + 1.0 - q1));
    }
  }
  // Bootstrap determinism.
  BoundsConfig config;
  config.bounds = {BoundKind::DTildeKnn, BoundKind::DTildeMst};
  config.bootstrap = BootstrapSettings{100, 0.95, 77};
  const auto data = gaussian(2, 1.0, 150, 11, 0);
  const auto r1 = estimate_all_bounds(data, config);
  const auto r2 = estimate_all_bounds(data, config);
  bool deterministic = true;
  for (std::size_t i = 0; i < r1.entries.size(); ++i)
    deterministic = deterministic && r1.entries[i].ci && r2.entries[i].ci &&
                    r1.entries[i].ci->lo == r2.entries[i].ci->lo && r1.entries[i].ci->hi == r2.entries[i].ci->hi;

  out.pass = drift <= 1e-12 && out_of_range == 0 && sandwich_violations == 0 && phi_err <= 1e-12 && deterministic;
  out.detail = "scale drift=" + fmt("%.2e", drift) + " out-of-range=" + std::to_string(out_of_range) +
               " sandwich violations=" + std::to_string(sandwich_violations) + "/" +
               std::to_string(sandwich_checks) + " phi identity err=" + fmt("%.2e", phi_err) +
               " bootstrap deterministic=" + (deterministic ? "yes" : "no");
  return out;
}

Outcome blend_pipeline() {
  const auto [dn, ds] = make_blend_fixture(150, 2, 3.0, 1);
  BlendConfig config;
  config.bounds.bounds = {BoundKind::DTildeKnn, BoundKind::DTildeMst};
  config.bounds.bootstrap = BootstrapSettings{100, 0.95, 1};
  const auto result = run_blend_sweep(dn, ds, config);

  // The fixture's informative matrix sits at r = 1, so every bound should
  // rise as r moves toward 0.
  bool monotone = true;
  std::string curve;
  for (const auto& e0 : result.reports.front().entries) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& report : result.reports) {
      const double v = report.find(e0.bound_name, e0.estimator)->estimate;
      monotone = monotone && v <= prev + 1e-12;
      prev = v;
    }
    curve += e0.bound_name + "/" + e0.estimator + fmt(" %.3f", result.reports.front().find(e0.bound_name, e0.estimator)->estimate) +
             fmt("->%.3f; ", result.reports.back().find(e0.bound_name, e0.estimator)->estimate);
  }
  const bool trend = result.reports.front().entries[0].estimate > result.reports.back().entries[0].estimate + 0.1;

  BoundsConfig plain = config.bounds;
  const auto at0 = estimate_all_bounds(ds, plain);
  const auto at1 = estimate_all_bounds(dn, plain);
  bool endpoints = blend_distances(dn, ds, 0.0).dist == ds.dist && blend_distances(dn, ds, 1.0).dist == dn.dist;
  for (std::size_t i = 0; i < at0.entries.size(); ++i)
    endpoints = endpoints && at0.entries[i].estimate == result.reports.front().entries[i].estimate &&
                at1.entries[i].estimate == result.reports.back().entries[i].estimate;

  Outcome out;
  out.pass = monotone && trend && endpoints;
  out.detail = std::string("monotone=") + (monotone ? "yes" : "no") + " endpoints exact=" + (endpoints ? "yes" : "no") +
               " r=0->r=1: " + curve;
  return out;
}

}  // namespace

int main() {
  run(1, "weight solver exactness", 1, weight_solver);
  run(2, "identity case", 60, identity_case);
  run(3, "D~ tracking", 600, dtilde_tracking);
  run(4, "estimator agreement", 300, estimator_agreement);
  run(5, "G_alpha tightness", 600, galpha_tightness);
  run(6, "bad-form divergence", 600, bad_form);
  run(7, "MSE decay", 600, mse_decay);
  run(8, "MST correctness", 10, mst_correctness);
  run(9, "invariant suite", 60, invariants);
  run(10, "blend pipeline", 60, blend_pipeline);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
