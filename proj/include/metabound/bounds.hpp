#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metabound/dataset.hpp"
#include "metabound/ensemble.hpp"
#include "metabound/mst.hpp"
#include "metabound/random.hpp"

namespace metabound {

/// {0.01, 0.02, ..., 0.99}.
std::vector<double> default_alpha_grid();

struct ChernoffBound {
  double bound = 0.5;        // clamped to [0, 0.5]
  double alpha_star = 0.5;   // minimizer over the grid
  double coefficient = 1.0;  // estimated c_alpha at alpha_star
  bool clamped = false;
};

/// min over alpha of q1^alpha q2^(1-alpha) c_alpha, with every c_alpha
/// estimated from the same neighbor profiles.
ChernoffBound chernoff_upper_bound(const EnsembleEstimator& estimator, double q1, std::span<const double> alpha_grid);
ChernoffBound chernoff_upper_bound(const TwoSampleData& data, double q1, std::span<const double> alpha_grid,
                                   const EnsembleConfig& config, EstimationMode mode = EstimationMode::Loo);

struct SandwichBounds {
  double lower = 0.5;
  double upper = 0.5;
  double dtilde = 0.0;  // after clamping to [0, 1]
  bool clamped = false;
};

/// 1/2 - sqrt(D~)/2 <= BER <= 1/2 - D~/2, with D~ clamped to [0, 1] first.
SandwichBounds dtilde_bounds(double dtilde_estimate);

struct ClampedValue {
  double value = 0.0;
  double raw = 0.0;
  bool clamped = false;
};

/// G_alpha lower bound clamped to [0, 0.5].
ClampedValue galpha_lower_bound(const EnsembleEstimator& estimator, double q1, double alpha);
ClampedValue galpha_lower_bound(const TwoSampleData& data, double q1, double alpha, const EnsembleConfig& config,
                                EstimationMode mode = EstimationMode::Loo);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  std::size_t used = 0;
  std::size_t failed = 0;
};

/// Nearest-rank percentile interval: the ceil(p B)-th order statistics for
/// p = (1 - level)/2 and (1 + level)/2.
Interval percentile_interval(std::vector<double> values, double level);

/// Copy of `data` with each class resampled with replacement.
TwoSampleData resample_within_classes(const TwoSampleData& data, Rng& rng);
DistanceData resample_within_classes(const DistanceData& data, Rng& rng);

/// Percentile bootstrap of a vector-valued statistic. A replicate whose
/// statistic throws, or yields a non-finite component, is dropped for that
/// component; more than 10% drops turns that component into an error.
/// Replicate b draws from derive_seed(seed, b).
template <typename Data>
std::vector<std::optional<Interval>> bootstrap_intervals(
    const std::function<std::vector<double>(const Data&)>& statistic, const Data& data, std::size_t replicates,
    double level, std::uint64_t seed, std::size_t components);

/// Scalar percentile bootstrap; throws if more than 10% of replicates fail.
Interval bootstrap_ci(const std::function<double(const TwoSampleData&)>& estimator, const TwoSampleData& data,
                      std::size_t replicates, double level, std::uint64_t seed);

enum class BoundKind { ChernoffUpper, DTildeKnn, DTildeMst, GAlphaLower };

enum class DTildeForm { Rational, Variational };

struct BootstrapSettings {
  std::size_t replicates = 500;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct BoundsConfig {
  std::vector<BoundKind> bounds = {BoundKind::ChernoffUpper, BoundKind::DTildeKnn, BoundKind::DTildeMst,
                                   BoundKind::GAlphaLower};
  std::vector<double> alpha_grid = default_alpha_grid();
  double galpha_alpha = 500.0;
  EnsembleConfig ensemble;
  EstimationMode mode = EstimationMode::Loo;
  DTildeForm dtilde_form = DTildeForm::Rational;
  HpNormalization hp_normalization = HpNormalization::PriorWeighted;
  std::optional<BootstrapSettings> bootstrap;
};

struct BoundEntry {
  std::string bound_name;  // chernoff_upper | dtilde_lower | dtilde_upper | galpha_lower
  std::string estimator;   // knn-ensemble | mst
  double estimate = 0.0;
  std::optional<Interval> ci;
  std::optional<double> alpha_star;
  bool clamped = false;
  std::optional<std::string> error;
  nlohmann::json diagnostics = nlohmann::json::object();
};

struct BoundsReport {
  std::vector<BoundEntry> entries;
  double q1 = 0.5;
  /// Ensemble weights, k values, duplicate-point counts.
  nlohmann::json diagnostics = nlohmann::json::object();

  const BoundEntry* find(const std::string& bound_name, const std::string& estimator) const;
};

/// Every requested bound on one dataset. A failing family yields entries with
/// `error` set instead of aborting the report. For distance input the k-NN
/// families are present only when an intrinsic dimension is known.
BoundsReport estimate_all_bounds(const TwoSampleData& data, const BoundsConfig& config);
BoundsReport estimate_all_bounds(const DistanceData& data, const BoundsConfig& config);

nlohmann::json to_json(const BoundsReport& report);

std::string to_string(BoundKind kind);
BoundKind bound_kind_from_string(const std::string& name);

}  // namespace metabound
