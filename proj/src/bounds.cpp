#include "metabound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "metabound/error.hpp"
#include "metabound/parallel.hpp"

namespace metabound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMaxReplicateFailure = 0.10;

double clamp_probability(double v, bool& clamped) {
  const double c = std::clamp(v, 0.0, 0.5);
  clamped = clamped || c != v;
  return c;
}

double prior_of(const TwoSampleData& data) { return data.q1; }
double prior_of(const DistanceData& data) { return data.q1(); }

bool supports_knn(const TwoSampleData&) { return true; }
bool supports_knn(const DistanceData& data) { return data.intrinsic_dim.has_value(); }

nlohmann::json ensemble_diagnostics(const EnsembleEstimator& e) {
  return {{"ell", e.ell()},
          {"k", e.ks()},
          {"weights", e.weights().w},
          {"weight_norm", e.weights().norm},
          {"constraint_residuals", e.weights().constraint_residuals},
          {"duplicate_points", e.duplicate_count()}};
}

BoundEntry make_entry(std::string name, std::string estimator) {
  BoundEntry e;
  e.bound_name = std::move(name);
  e.estimator = std::move(estimator);
  e.estimate = kNaN;
  return e;
}

template <typename Data>
BoundsReport evaluate(const Data& data, const BoundsConfig& config) {
  if (config.bounds.empty()) throw Error("no bounds requested");
  BoundsReport report;
  report.q1 = prior_of(data);
  const double q1 = report.q1;
  const auto wants = [&](BoundKind k) {
    return std::find(config.bounds.begin(), config.bounds.end(), k) != config.bounds.end();
  };
  const bool knn_requested =
      wants(BoundKind::ChernoffUpper) || wants(BoundKind::DTildeKnn) || wants(BoundKind::GAlphaLower);
  const bool knn = knn_requested && supports_knn(data);
  if (knn_requested && !knn) report.diagnostics["knn_skipped"] = "no intrinsic dimension for distance input";

  std::optional<EnsembleEstimator> estimator;
  std::string knn_error;
  if (knn) {
    try {
      estimator.emplace(data, config.ensemble, config.mode);
      report.diagnostics["ensemble"] = ensemble_diagnostics(*estimator);
    } catch (const std::exception& ex) {
      knn_error = ex.what();
    }
  }

  // Runs `fill` on freshly made entries; on failure every entry carries the error.
  auto family = [&](std::vector<BoundEntry> entries, const auto& fill) {
    try {
      if (!knn_error.empty() && entries.front().estimator == "knn-ensemble") throw Error(knn_error);
      fill(entries);
    } catch (const std::exception& ex) {
      for (auto& e : entries) {
        e.estimate = kNaN;
        e.error = ex.what();
      }
    }
    for (auto& e : entries) report.entries.push_back(std::move(e));
  };

  if (knn && wants(BoundKind::ChernoffUpper)) {
    family({make_entry("chernoff_upper", "knn-ensemble")}, [&](std::vector<BoundEntry>& es) {
      const auto c = chernoff_upper_bound(*estimator, q1, config.alpha_grid);
      es[0].estimate = c.bound;
      es[0].alpha_star = c.alpha_star;
      es[0].clamped = c.clamped;
      es[0].diagnostics["chernoff_coefficient"] = c.coefficient;
    });
  }
  if (knn && wants(BoundKind::DTildeKnn)) {
    family({make_entry("dtilde_lower", "knn-ensemble"), make_entry("dtilde_upper", "knn-ensemble")},
           [&](std::vector<BoundEntry>& es) {
             const auto spec = config.dtilde_form == DTildeForm::Rational ? FunctionalSpec::dtilde_rational(q1)
                                                                          : FunctionalSpec::dtilde_variational(q1);
             const double raw = bound_from_dphi(spec, estimator->estimate(spec).value);
             const auto s = dtilde_bounds(raw);
             es[0].estimate = s.lower;
             es[1].estimate = s.upper;
             for (auto& e : es) {
               e.clamped = s.clamped;
               e.diagnostics["dtilde"] = raw;
               e.diagnostics["form"] = spec.name();
             }
           });
  }
  if (wants(BoundKind::DTildeMst)) {
    family({make_entry("dtilde_lower", "mst"), make_entry("dtilde_upper", "mst")}, [&](std::vector<BoundEntry>& es) {
      const auto mst = minimum_spanning_tree(data);
      std::size_t m = 0;
      std::size_t n = 0;
      if constexpr (std::is_same_v<Data, TwoSampleData>) {
        m = data.f1.size();
        n = data.f2.size();
      } else {
        m = data.count(1);
        n = data.count(2);
      }
      const double dt = hp_dtilde_from_count(mst.cross_count, m, n, config.hp_normalization);
      const auto s = dtilde_bounds(dt);
      es[0].estimate = s.lower;
      es[1].estimate = s.upper;
      for (auto& e : es) {
        e.clamped = s.clamped;
        e.diagnostics["dtilde"] = dt;
        e.diagnostics["cross_count"] = mst.cross_count;
      }
    });
  }
  if (knn && wants(BoundKind::GAlphaLower)) {
    family({make_entry("galpha_lower", "knn-ensemble")}, [&](std::vector<BoundEntry>& es) {
      const auto g = galpha_lower_bound(*estimator, q1, config.galpha_alpha);
      es[0].estimate = g.value;
      es[0].clamped = g.clamped;
      es[0].diagnostics["alpha"] = config.galpha_alpha;
      es[0].diagnostics["raw"] = g.raw;
    });
  }
  return report;
}

std::vector<double> estimates_of(const BoundsReport& r) {
  std::vector<double> out;
  out.reserve(r.entries.size());
  for (const auto& e : r.entries) out.push_back(e.error ? kNaN : e.estimate);
  return out;
}

template <typename Data>
BoundsReport estimate_with_bootstrap(const Data& data, const BoundsConfig& config) {
  BoundsReport report = evaluate(data, config);
  if (!config.bootstrap) return report;
  const auto& b = config.bootstrap;
  std::function<std::vector<double>(const Data&)> statistic = [&](const Data& d) {
    return estimates_of(evaluate(d, config));
  };
  const auto intervals = bootstrap_intervals<Data>(statistic, data, b->replicates, b->level, b->seed,
                                                   report.entries.size());
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    auto& e = report.entries[i];
    if (e.error) continue;
    if (!intervals[i]) {
      e.diagnostics["ci_error"] = "more than 10% of bootstrap replicates failed";
      continue;
    }
    Interval ci = *intervals[i];
    // Percentile intervals need not contain the point estimate; widen so they do.
    ci.lo = std::min(ci.lo, e.estimate);
    ci.hi = std::max(ci.hi, e.estimate);
    e.ci = ci;
  }
  return report;
}

}  // namespace

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  return grid;
}

ChernoffBound chernoff_upper_bound(const EnsembleEstimator& estimator, double q1, std::span<const double> alpha_grid) {
  if (!(q1 > 0.0 && q1 < 1.0)) throw Error("prior q1 must lie in (0, 1)");
  if (alpha_grid.empty()) throw Error("empty alpha grid");
  ChernoffBound best;
  double best_raw = std::numeric_limits<double>::infinity();
  for (double alpha : alpha_grid) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("Chernoff alpha grid must lie in (0, 1)");
    const double c = estimator.estimate(FunctionalSpec::chernoff(alpha)).value;
    const double raw = std::pow(q1, alpha) * std::pow(1.0 - q1, 1.0 - alpha) * c;
    if (raw < best_raw) {
      best_raw = raw;
      best.alpha_star = alpha;
      best.coefficient = c;
    }
  }
  best.clamped = false;
  best.bound = clamp_probability(best_raw, best.clamped);
  return best;
}

ChernoffBound chernoff_upper_bound(const TwoSampleData& data, double q1, std::span<const double> alpha_grid,
                                   const EnsembleConfig& config, EstimationMode mode) {
  return chernoff_upper_bound(EnsembleEstimator(data, config, mode), q1, alpha_grid);
}

SandwichBounds dtilde_bounds(double dtilde_estimate) {
  if (!std::isfinite(dtilde_estimate)) throw Error("non-finite D~ estimate");
  SandwichBounds s;
  s.dtilde = std::clamp(dtilde_estimate, 0.0, 1.0);
  s.clamped = s.dtilde != dtilde_estimate;
  s.lower = 0.5 - 0.5 * std::sqrt(s.dtilde);
  s.upper = 0.5 - 0.5 * s.dtilde;
  return s;
}

ClampedValue galpha_lower_bound(const EnsembleEstimator& estimator, double q1, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("G_alpha requires alpha > 0");
  const auto spec = FunctionalSpec::galpha(alpha, q1);
  ClampedValue out;
  out.raw = bound_from_dphi(spec, estimator.estimate(spec).value);
  out.value = clamp_probability(out.raw, out.clamped);
  return out;
}

ClampedValue galpha_lower_bound(const TwoSampleData& data, double q1, double alpha, const EnsembleConfig& config,
                                EstimationMode mode) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("G_alpha requires alpha > 0");
  return galpha_lower_bound(EnsembleEstimator(data, config, mode), q1, alpha);
}

Interval percentile_interval(std::vector<double> values, double level) {
  if (values.empty()) throw Error("no values for percentile interval");
  if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto order_stat = [&](double p) {
    // Nearest rank; the small offset absorbs rounding in p * n.
    const double rank = std::ceil(p * n - 1e-9);
    const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, n)) - 1;
    return values[idx];
  };
  Interval out;
  out.level = level;
  out.lo = order_stat((1.0 - level) / 2.0);
  out.hi = order_stat((1.0 + level) / 2.0);
  out.used = values.size();
  return out;
}

TwoSampleData resample_within_classes(const TwoSampleData& data, Rng& rng) {
  auto draw = [&](const PointSet& set) {
    PointSet out(set.dim());
    out.reserve(set.size());
    std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
    for (std::size_t i = 0; i < set.size(); ++i) out.push_back(set[pick(rng)]);
    return out;
  };
  TwoSampleData out;
  out.f1 = draw(data.f1);
  out.f2 = draw(data.f2);
  out.q1 = data.q1;
  return out;
}

DistanceData resample_within_classes(const DistanceData& data, Rng& rng) {
  std::vector<std::size_t> class1;
  std::vector<std::size_t> class2;
  for (std::size_t i = 0; i < data.n; ++i) (data.labels[i] == 1 ? class1 : class2).push_back(i);
  std::vector<std::size_t> pick;
  pick.reserve(data.n);
  for (const auto* cls : {&class1, &class2}) {
    std::uniform_int_distribution<std::size_t> u(0, cls->size() - 1);
    for (std::size_t i = 0; i < cls->size(); ++i) pick.push_back((*cls)[u(rng)]);
  }
  DistanceData out;
  out.n = data.n;
  out.dist.resize(data.n * data.n);
  out.labels.resize(data.n);
  out.intrinsic_dim = data.intrinsic_dim;
  out.q1_override = data.q1_override;
  for (std::size_t i = 0; i < data.n; ++i) {
    out.labels[i] = data.labels[pick[i]];
    for (std::size_t j = 0; j < data.n; ++j) out.dist[i * data.n + j] = i == j ? 0.0 : data(pick[i], pick[j]);
  }
  return out;
}

template <typename Data>
std::vector<std::optional<Interval>> bootstrap_intervals(
    const std::function<std::vector<double>(const Data&)>& statistic, const Data& data, std::size_t replicates,
    double level, std::uint64_t seed, std::size_t components) {
  if (replicates < 2) throw Error("bootstrap needs at least two replicates");
  if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
  std::vector<std::vector<double>> values(replicates, std::vector<double>(components, kNaN));
  parallel_for(replicates, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    const Data sample = resample_within_classes(data, rng);
    try {
      auto v = statistic(sample);
      if (v.size() == components) values[b] = std::move(v);
    } catch (const std::exception&) {
      // Dropped replicate; components stay NaN.
    }
  });
  std::vector<std::optional<Interval>> out(components);
  for (std::size_t c = 0; c < components; ++c) {
    std::vector<double> ok;
    for (const auto& v : values)
      if (std::isfinite(v[c])) ok.push_back(v[c]);
    const std::size_t failed = replicates - ok.size();
    if (ok.empty() || static_cast<double>(failed) > kMaxReplicateFailure * static_cast<double>(replicates)) continue;
    Interval iv = percentile_interval(std::move(ok), level);
    iv.failed = failed;
    out[c] = iv;
  }
  return out;
}

template std::vector<std::optional<Interval>> bootstrap_intervals<TwoSampleData>(
    const std::function<std::vector<double>(const TwoSampleData&)>&, const TwoSampleData&, std::size_t, double,
    std::uint64_t, std::size_t);
template std::vector<std::optional<Interval>> bootstrap_intervals<DistanceData>(
    const std::function<std::vector<double>(const DistanceData&)>&, const DistanceData&, std::size_t, double,
    std::uint64_t, std::size_t);

Interval bootstrap_ci(const std::function<double(const TwoSampleData&)>& estimator, const TwoSampleData& data,
                      std::size_t replicates, double level, std::uint64_t seed) {
  std::function<std::vector<double>(const TwoSampleData&)> wrapped = [&](const TwoSampleData& d) {
    return std::vector<double>{estimator(d)};
  };
  auto result = bootstrap_intervals<TwoSampleData>(wrapped, data, replicates, level, seed, 1);
  if (!result[0]) throw Error("more than 10% of bootstrap replicates failed");
  return *result[0];
}

const BoundEntry* BoundsReport::find(const std::string& bound_name, const std::string& estimator) const {
  for (const auto& e : entries)
    if (e.bound_name == bound_name && e.estimator == estimator) return &e;
  return nullptr;
}

BoundsReport estimate_all_bounds(const TwoSampleData& data, const BoundsConfig& config) {
  data.validate();
  return estimate_with_bootstrap(data, config);
}

BoundsReport estimate_all_bounds(const DistanceData& data, const BoundsConfig& config) {
  data.validate();
  return estimate_with_bootstrap(data, config);
}

nlohmann::json to_json(const BoundsReport& report) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json j;
    j["bound_name"] = e.bound_name;
    j["estimator"] = e.estimator;
    j["estimate"] = e.error ? nlohmann::json(nullptr) : nlohmann::json(e.estimate);
    if (e.ci) {
      j["ci"] = {e.ci->lo, e.ci->hi};
      j["level"] = e.ci->level;
    } else {
      j["ci"] = nullptr;
      j["level"] = nullptr;
    }
    if (e.alpha_star) j["alpha_star"] = *e.alpha_star;
    j["clamped"] = e.clamped;
    if (e.error) j["error"] = *e.error;
    j["diagnostics"] = e.diagnostics;
    bounds.push_back(std::move(j));
  }
  return {{"q1", report.q1}, {"bounds", bounds}, {"diagnostics", report.diagnostics}};
}

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::ChernoffUpper:
      return "chernoff";
    case BoundKind::DTildeKnn:
      return "dtilde-knn";
    case BoundKind::DTildeMst:
      return "dtilde-mst";
    case BoundKind::GAlphaLower:
      return "galpha";
  }
  return "unknown";
}

BoundKind bound_kind_from_string(const std::string& name) {
  for (auto k : {BoundKind::ChernoffUpper, BoundKind::DTildeKnn, BoundKind::DTildeMst, BoundKind::GAlphaLower})
    if (to_string(k) == name) return k;
  throw Error("unknown bound '" + name + "' (expected chernoff, dtilde-knn, dtilde-mst or galpha)");
}

}  // namespace metabound
