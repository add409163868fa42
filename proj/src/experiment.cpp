#include "metabound/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "metabound/error.hpp"
#include "metabound/parallel.hpp"

namespace metabound {

namespace {

constexpr double kMaxTrialFailure = 0.05;

std::vector<std::pair<std::string, std::string>> expected_series(const BoundsConfig& config) {
  const auto wants = [&](BoundKind k) {
    return std::find(config.bounds.begin(), config.bounds.end(), k) != config.bounds.end();
  };
  std::vector<std::pair<std::string, std::string>> out;
  if (wants(BoundKind::ChernoffUpper)) out.emplace_back("chernoff_upper", "knn-ensemble");
  if (wants(BoundKind::DTildeKnn)) {
    out.emplace_back("dtilde_lower", "knn-ensemble");
    out.emplace_back("dtilde_upper", "knn-ensemble");
  }
  if (wants(BoundKind::DTildeMst)) {
    out.emplace_back("dtilde_lower", "mst");
    out.emplace_back("dtilde_upper", "mst");
  }
  if (wants(BoundKind::GAlphaLower)) out.emplace_back("galpha_lower", "knn-ensemble");
  return out;
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path.string());
  return out;
}

std::string csv_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void SweepConfig::validate() const {
  if (deltas.empty()) throw Error("empty delta grid");
  for (double d : deltas)
    if (!(d >= 0.0) || !std::isfinite(d)) throw Error("delta values must be finite and nonnegative");
  if (d == 0) throw Error("dimension must be positive");
  if (T < 2) throw Error("T must be at least 2");
  if (trials == 0) throw Error("trials must be >= 1");
  if (!(q1 > 0.0 && q1 < 1.0)) throw Error("prior q1 must lie in (0, 1)");
  if (bounds.bounds.empty()) throw Error("no bounds requested");
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t delta_index, std::size_t trial) {
  return derive_seed(master, (static_cast<std::uint64_t>(delta_index) << 32) | static_cast<std::uint64_t>(trial));
}

bool SweepResult::ok() const {
  return static_cast<double>(failed_trials) <= kMaxTrialFailure * static_cast<double>(trials.size());
}

SweepResult run_gaussian_sweep(const SweepConfig& config) {
  config.validate();
  BoundsConfig bounds = config.bounds;
  bounds.bootstrap.reset();

  SweepResult result;
  const std::size_t cells = config.deltas.size() * config.trials;
  result.trials.resize(cells);
  parallel_for(cells, [&](std::size_t cell) {
    const std::size_t di = cell / config.trials;
    const std::size_t trial = cell % config.trials;
    TrialOutcome& out = result.trials[cell];
    out.delta = config.deltas[di];
    out.trial = trial;
    try {
      const auto spec = GaussianSpec::separated(config.d, out.delta, config.T, trial_seed(config.seed, di, trial),
                                                config.q1);
      out.report = estimate_all_bounds(sample_gaussian_pair(spec), bounds);
      for (const auto& e : out.report.entries)
        if (e.error) {
          out.error = e.bound_name + "/" + e.estimator + ": " + *e.error;
          break;
        }
    } catch (const std::exception& ex) {
      out.error = ex.what();
    }
  });
  result.failed_trials = static_cast<std::size_t>(
      std::count_if(result.trials.begin(), result.trials.end(), [](const TrialOutcome& t) { return t.error.has_value(); }));

  const auto series = expected_series(bounds);
  for (std::size_t di = 0; di < config.deltas.size(); ++di) {
    const double truth = true_gaussian_ber(config.deltas[di], config.q1);
    for (const auto& [name, estimator] : series) {
      SweepRow row;
      row.delta = config.deltas[di];
      row.bound_name = name;
      row.estimator = estimator;
      row.truth = truth;
      std::vector<double> values;
      std::size_t failures = 0;
      for (std::size_t t = 0; t < config.trials; ++t) {
        const auto* e = result.trials[di * config.trials + t].report.find(name, estimator);
        if (e && !e->error && std::isfinite(e->estimate))
          values.push_back(e->estimate);
        else
          ++failures;
      }
      row.n = values.size();
      if (failures > 0) row.error = "failed_trials=" + std::to_string(failures);
      if (values.empty()) {
        row.mean = row.sd = std::numeric_limits<double>::quiet_NaN();
      } else {
        double sum = 0.0;
        for (double v : values) sum += v;
        row.mean = sum / static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - row.mean) * (v - row.mean);
        row.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
      }
      result.rows.push_back(std::move(row));
    }
    result.rows.push_back({config.deltas[di], "ber", "oracle", truth, 0.0, truth, config.trials, ""});
  }
  return result;
}

void write_sweep(const std::string& out_dir, const SweepResult& result, const SweepConfig& config) {
  auto csv = open_output(out_dir, "sweep.csv");
  csv << "delta,bound_name,estimator,mean,sd,truth,n,error\n";
  for (const auto& r : result.rows)
    csv << format_number(r.delta) << ',' << r.bound_name << ',' << r.estimator << ',' << format_number(r.mean) << ','
        << format_number(r.sd) << ',' << format_number(r.truth) << ',' << r.n << ',' << r.error << '\n';

  nlohmann::json bounds = nlohmann::json::array();
  for (auto k : config.bounds.bounds) bounds.push_back(to_string(k));
  const nlohmann::json manifest = {
      {"kind", "gaussian_sweep"},
      {"data", "sweep.csv"},
      {"x", "delta"},
      {"y", "mean"},
      {"error_bar", "sd"},
      {"reference", "truth"},
      {"series_keys", {"bound_name", "estimator"}},
      {"config",
       {{"d", config.d},
        {"T", config.T},
        {"trials", config.trials},
        {"seed", config.seed},
        {"q1", config.q1},
        {"deltas", config.deltas},
        {"bounds", bounds},
        {"galpha_alpha", config.bounds.galpha_alpha}}},
      {"failed_trials", result.failed_trials}};
  auto man = open_output(out_dir, "sweep_manifest.json");
  man << manifest.dump(2) << '\n';
}

DistanceData blend_distances(const DistanceData& dn, const DistanceData& ds, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw Error("blend weight r must lie in [0, 1]");
  if (dn.n != ds.n || dn.dist.size() != ds.dist.size()) throw Error("distance matrices differ in shape");
  if (dn.labels != ds.labels) throw Error("distance matrices carry different labels");
  if (dn.intrinsic_dim != ds.intrinsic_dim) throw Error("intrinsic dimensions differ");
  DistanceData out = dn;
  if (r == 1.0) return out;
  if (r == 0.0) return ds;
  for (std::size_t i = 0; i < out.dist.size(); ++i) out.dist[i] = r * dn.dist[i] + (1.0 - r) * ds.dist[i];
  return out;
}

void BlendConfig::validate() const {
  if (r_grid.empty()) throw Error("empty r grid");
  for (double r : r_grid)
    if (!(r >= 0.0 && r <= 1.0)) throw Error("blend weights must lie in [0, 1]");
  if (bounds.bounds.empty()) throw Error("no bounds requested");
}

BlendResult run_blend_sweep(const DistanceData& dn, const DistanceData& ds, const BlendConfig& config) {
  config.validate();
  dn.validate();
  ds.validate();
  BlendResult result;
  for (double r : config.r_grid) {
    auto report = estimate_all_bounds(blend_distances(dn, ds, r), config.bounds);
    for (const auto& e : report.entries) {
      BlendRow row{r, e.bound_name, e.estimator, e.estimate, std::nullopt, std::nullopt, e.error.value_or("")};
      if (e.ci) {
        row.ci_lo = e.ci->lo;
        row.ci_hi = e.ci->hi;
      }
      result.rows.push_back(std::move(row));
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

void write_blend(const std::string& out_dir, const BlendResult& result, const BlendConfig& config) {
  auto csv = open_output(out_dir, "blend.csv");
  csv << "r,bound_name,estimator,estimate,ci_lo,ci_hi,error\n";
  for (const auto& r : result.rows)
    csv << format_number(r.r) << ',' << r.bound_name << ',' << r.estimator << ',' << format_number(r.estimate) << ','
        << csv_optional(r.ci_lo) << ',' << csv_optional(r.ci_hi) << ',' << r.error << '\n';
  nlohmann::json bounds = nlohmann::json::array();
  for (auto k : config.bounds.bounds) bounds.push_back(to_string(k));
  nlohmann::json manifest = {{"kind", "blend_sweep"},
                             {"data", "blend.csv"},
                             {"x", "r"},
                             {"y", "estimate"},
                             {"interval", {"ci_lo", "ci_hi"}},
                             {"series_keys", {"bound_name", "estimator"}},
                             {"config", {{"r_grid", config.r_grid}, {"bounds", bounds}}}};
  if (config.bounds.bootstrap)
    manifest["config"]["bootstrap"] = {{"replicates", config.bounds.bootstrap->replicates},
                                       {"level", config.bounds.bootstrap->level},
                                       {"seed", config.bounds.bootstrap->seed}};
  auto man = open_output(out_dir, "blend_manifest.json");
  man << manifest.dump(2) << '\n';
}

std::pair<DistanceData, DistanceData> make_blend_fixture(std::size_t per_class, std::size_t dim, double separation,
                                                         std::uint64_t seed) {
  const auto informative = sample_gaussian_pair(GaussianSpec::separated(dim, separation, per_class, derive_seed(seed, 0)));
  const auto noise = sample_gaussian_pair(GaussianSpec::separated(dim, 0.0, per_class, derive_seed(seed, 1)));
  auto dn = pairwise_distances(informative);
  auto ds = pairwise_distances(noise);
  dn.q1_override.reset();
  ds.q1_override.reset();
  return {std::move(dn), std::move(ds)};
}

}  // namespace metabound
