#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "metabound/bounds.hpp"
#include "metabound/dataset.hpp"

namespace metabound {

struct SweepConfig {
  std::vector<double> deltas = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  std::size_t d = 5;
  std::size_t T = 1000;
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  double q1 = 0.5;
  BoundsConfig bounds;  // the bootstrap member is ignored in sweeps

  void validate() const;
};

/// Seed of trial `trial` at grid position `delta_index`: the stream counter is
/// (delta_index << 32) | trial under the master seed.
std::uint64_t trial_seed(std::uint64_t master, std::size_t delta_index, std::size_t trial);

struct TrialOutcome {
  double delta = 0.0;
  std::size_t trial = 0;
  BoundsReport report;
  std::optional<std::string> error;  // set when any requested bound failed
};

struct SweepRow {
  double delta = 0.0;
  std::string bound_name;
  std::string estimator;
  double mean = 0.0;
  double sd = 0.0;  // over-trial sample standard deviation
  double truth = 0.0;
  std::size_t n = 0;  // successful trials
  std::string error;  // empty unless some trial failed for this series
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<TrialOutcome> trials;
  std::size_t failed_trials = 0;

  /// False when more than 5% of trials failed.
  bool ok() const;
};

SweepResult run_gaussian_sweep(const SweepConfig& config);

/// Writes sweep.csv (delta,bound_name,estimator,mean,sd,truth,n,error) and
/// sweep_manifest.json to `out_dir`.
void write_sweep(const std::string& out_dir, const SweepResult& result, const SweepConfig& config);

/// r * Dn + (1 - r) * Ds, entrywise.
DistanceData blend_distances(const DistanceData& dn, const DistanceData& ds, double r);

struct BlendConfig {
  std::vector<double> r_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  BoundsConfig bounds;

  void validate() const;
};

struct BlendRow {
  double r = 0.0;
  std::string bound_name;
  std::string estimator;
  double estimate = 0.0;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  std::string error;
};

struct BlendResult {
  std::vector<BlendRow> rows;
  std::vector<BoundsReport> reports;  // one per r, grid order
};

BlendResult run_blend_sweep(const DistanceData& dn, const DistanceData& ds, const BlendConfig& config);

/// Writes blend.csv (r,bound_name,estimator,estimate,ci_lo,ci_hi,error) and
/// blend_manifest.json to `out_dir`.
void write_blend(const std::string& out_dir, const BlendResult& result, const BlendConfig& config);

/// Synthetic stand-in for a pair of feature-space distance matrices over the
/// same labeled objects: the first separates the classes (Gaussian clouds
/// `separation` apart), the second carries no class information.
std::pair<DistanceData, DistanceData> make_blend_fixture(std::size_t per_class, std::size_t dim, double separation,
                                                         std::uint64_t seed);

/// "%.17g" formatting used by every numeric output.
std::string format_number(double v);

}  // namespace metabound
