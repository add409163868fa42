#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "metabound/dataset.hpp"

namespace metabound {

enum class QueryStrategy {
  Auto,        // kd-tree up to 15 dimensions, brute force above
  BruteForce,
  KdTree,
};

/// Exact k-nearest-neighbor index over a reference point set.
///
/// The kd-tree path is exact: it prunes only subtrees whose bounding slab is
/// strictly farther than the current k-th candidate, so it returns the same
/// order statistics as a full scan.
class NeighborIndex {
 public:
  explicit NeighborIndex(PointSet refs, QueryStrategy strategy = QueryStrategy::Auto);

  std::size_t size() const { return refs_.size(); }
  std::size_t dim() const { return refs_.dim(); }
  bool uses_tree() const { return use_tree_; }

  /// The k smallest distances from `query` to the references, ascending.
  /// `exclude` removes one reference index (leave-one-out self exclusion).
  std::vector<double> nearest_distances(std::span<const double> query, std::size_t k,
                                        std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t axis = 0;
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void search(int node, std::span<const double> query, std::size_t k, std::optional<std::size_t> exclude,
              std::vector<double>& heap) const;
  void scan(std::size_t begin, std::size_t end, std::span<const double> query, std::size_t k,
            std::optional<std::size_t> exclude, std::vector<double>& heap) const;

  PointSet refs_;
  bool use_tree_ = false;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Exact k-th nearest distance; throws when k exceeds the eligible count.
double kth_neighbor_distance(const NeighborIndex& index, std::span<const double> query, std::size_t k,
                             std::optional<std::size_t> exclude = std::nullopt);

enum class EstimationMode {
  Loo,    // every class-2 point is evaluated, excluded from its own reference set
  Split,  // class-2 split into N evaluation points and M = ceil(T/2) reference points
};

/// Volume of the d-dimensional unit ball.
double unit_ball_volume(std::size_t d);

/// k / (M * unit_ball_volume(d) * rho^d). Requires rho > 0.
double knn_density(std::size_t k, std::size_t M, std::size_t d, double rho);

struct DensityPair {
  double f1 = 0.0;
  double f2 = 0.0;
  double t = 1.0;  // f1 / f2
  std::size_t k = 0;
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  bool duplicate = false;  // a zero neighbor distance was replaced by eps_dup
};

/// Sorted nearest-neighbor distances of every evaluation point to both
/// reference sets, for all k up to k_max. Density pairs for any k <= k_max
/// are read off without another neighbor search.
struct NeighborProfiles {
  std::size_t dim = 0;
  std::size_t n_eval = 0;
  std::size_t k_max = 0;
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  double eps_dup = 0.0;
  std::vector<double> rho1;  // n_eval x k_max
  std::vector<double> rho2;  // n_eval x k_max

  /// Reference count used for k(l) = l * sqrt(M).
  std::size_t reference_count() const { return std::min(m1, m2); }
};

/// Reference-set sizes for `mode` without building anything.
std::pair<std::size_t, std::size_t> reference_counts(const TwoSampleData& data, EstimationMode mode);
std::pair<std::size_t, std::size_t> reference_counts(const DistanceData& data, EstimationMode mode);

NeighborProfiles build_neighbor_profiles(const TwoSampleData& data, std::size_t k_max, EstimationMode mode,
                                         QueryStrategy strategy = QueryStrategy::Auto);

/// Distance-matrix variant; requires data.intrinsic_dim.
NeighborProfiles build_neighbor_profiles(const DistanceData& data, std::size_t k_max, EstimationMode mode);

std::vector<DensityPair> density_pairs(const NeighborProfiles& profiles, std::size_t k);

std::vector<DensityPair> density_profiles(const TwoSampleData& data, std::size_t k,
                                          EstimationMode mode = EstimationMode::Loo);
std::vector<DensityPair> density_profiles(const DistanceData& data, std::size_t k,
                                          EstimationMode mode = EstimationMode::Loo);

}  // namespace metabound
