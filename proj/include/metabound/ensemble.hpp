#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "metabound/dataset.hpp"
#include "metabound/functionals.hpp"
#include "metabound/neighbors.hpp"

namespace metabound {

enum class WeightMode {
  ExactNull,  // sum w = 1 and every bias basis term l^{j/d}, j < d, annihilated
  Relaxed,    // minimize the largest scaled basis residual within a norm ball
};

/// Relaxed mode measures basis term j as |sum w l^{j/d}| * M^{1/2 - j/(2d)},
/// i.e. its bias contribution relative to the parametric rate M^{-1/2}, and
/// drives the largest one below `relaxed_epsilon` subject to sum w = 1 and
/// ||w|| <= relaxed_eta. When that is out of reach inside the ball, the
/// smallest maximum found is returned.
struct EnsembleConfig {
  std::vector<double> ell;  // empty: default_ell(d)
  WeightMode mode = WeightMode::Relaxed;
  double relaxed_epsilon = 1.0;
  double relaxed_eta = 3.0;
};

/// L = max(d, 3) values evenly spaced on [0.3, 3.0].
std::vector<double> default_ell(std::size_t d);

struct WeightVector {
  std::vector<double> w;
  /// |sum w - 1| followed by |sum w l^{j/d}| for j = 1..d-1.
  std::vector<double> constraint_residuals;
  double norm = 0.0;
};

/// Ensemble weights over the base estimators indexed by `ell`.
/// `sample_size` only matters in relaxed mode, where it sets the stopping
/// tolerance.
WeightVector solve_weights(const std::vector<double>& ell, std::size_t d, WeightMode mode = WeightMode::ExactNull,
                           std::optional<std::size_t> sample_size = std::nullopt,
                           const EnsembleConfig& tuning = {});

/// k(l) = round-half-up(l sqrt(M)) clamped to [1, M-1]. Throws when two
/// values of l land on the same k.
std::vector<std::size_t> neighbor_counts(const std::vector<double>& ell, std::size_t M);

/// Plain plug-in estimate (1/N) sum phi(t_i) on the raw D_phi scale.
double base_estimate(const std::vector<DensityPair>& pairs, const FunctionalSpec& spec);
double base_estimate(const TwoSampleData& data, const FunctionalSpec& spec, std::size_t k,
                     EstimationMode mode = EstimationMode::Loo);

struct EnsembleResult {
  double value = 0.0;  // raw D_phi scale
  std::vector<double> base_values;
  std::vector<std::size_t> ks;
  WeightVector weights;
};

/// Weighted k-NN ensemble bound to one dataset. Neighbor searches run once
/// at construction; every functional evaluated afterwards reuses them.
class EnsembleEstimator {
 public:
  EnsembleEstimator(const TwoSampleData& data, const EnsembleConfig& config,
                    EstimationMode mode = EstimationMode::Loo);
  EnsembleEstimator(const DistanceData& data, const EnsembleConfig& config,
                    EstimationMode mode = EstimationMode::Loo);

  EnsembleResult estimate(const FunctionalSpec& spec) const;

  const std::vector<std::size_t>& ks() const { return ks_; }
  const WeightVector& weights() const { return weights_; }
  const std::vector<double>& ell() const { return ell_; }
  const NeighborProfiles& profiles() const { return profiles_; }
  /// Evaluation points whose neighbor distance was zero for some k in use.
  std::size_t duplicate_count() const { return duplicate_count_; }
  const std::vector<DensityPair>& pairs_for(std::size_t slot) const { return pairs_[slot]; }

 private:
  void prepare(std::size_t d, std::size_t M, const EnsembleConfig& config);
  void finish();

  std::vector<double> ell_;
  std::vector<std::size_t> ks_;
  WeightVector weights_;
  NeighborProfiles profiles_;
  std::vector<std::vector<DensityPair>> pairs_;
  std::size_t duplicate_count_ = 0;
};

/// One-shot convenience: sum over l of w(l) * base_estimate(k(l)).
double ensemble_estimate(const TwoSampleData& data, const FunctionalSpec& spec, const EnsembleConfig& config,
                         EstimationMode mode = EstimationMode::Loo);

}  // namespace metabound
