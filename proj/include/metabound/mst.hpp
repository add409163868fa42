#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "metabound/dataset.hpp"

namespace metabound {

struct MstEdge {
  std::size_t i = 0;
  std::size_t j = 0;  // i < j
  double weight = 0.0;
};

struct MstResult {
  std::vector<MstEdge> edges;  // n - 1 edges in insertion order
  std::size_t cross_count = 0;  // Friedman-Rafsky R
  double total_weight = 0.0;
};

/// Dense Prim over an implicit complete graph of n nodes. Among equal keys the
/// lowest vertex index is attached first, and a vertex keeps its earliest
/// parent on ties, so the tree is a deterministic function of the weights.
MstResult minimum_spanning_tree(std::size_t n, const std::function<double(std::size_t, std::size_t)>& weight,
                                const std::vector<int>& labels);

MstResult minimum_spanning_tree(const DistanceData& dist);

/// Euclidean MST of the pooled sample (class-1 points first) without
/// materializing the n x n matrix.
MstResult minimum_spanning_tree(const TwoSampleData& data);

enum class HpNormalization {
  PriorWeighted,  // 1 - R (m + n) / (2 m n)
  Pooled,         // 1 - 2 R / (m + n)
};

/// D~ from the cross-edge count, clamped to [0, 1].
double hp_dtilde_from_count(std::size_t cross_count, std::size_t m, std::size_t n,
                            HpNormalization norm = HpNormalization::PriorWeighted);

double hp_dtilde_estimate(const DistanceData& dist, HpNormalization norm = HpNormalization::PriorWeighted);
double hp_dtilde_estimate(const TwoSampleData& data, HpNormalization norm = HpNormalization::PriorWeighted);

/// CSV dump: i,j,weight,label_i,label_j.
void write_mst_edges(const std::string& path, const MstResult& mst, const std::vector<int>& labels);

}  // namespace metabound
