#include "metabound/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "metabound/error.hpp"
#include "metabound/parallel.hpp"

namespace metabound {

namespace {

constexpr std::size_t kLeafSize = 12;
constexpr std::size_t kMaxTreeDim = 15;
constexpr double kDuplicateScale = 1e-10;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

// Bounded max-heap of squared distances; the front is the current k-th best.
void offer(std::vector<double>& heap, std::size_t k, double d2) {
  if (heap.size() < k) {
    heap.push_back(d2);
    std::push_heap(heap.begin(), heap.end());
  } else if (d2 < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = d2;
    std::push_heap(heap.begin(), heap.end());
  }
}

// Bounding-box diagonal of the pooled sample; bounds the diameter from above.
double bounding_diagonal(const TwoSampleData& data) {
  const std::size_t d = data.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const PointSet* set : {&data.f1, &data.f2})
    for (std::size_t i = 0; i < set->size(); ++i)
      for (std::size_t c = 0; c < d; ++c) {
        lo[c] = std::min(lo[c], (*set)[i][c]);
        hi[c] = std::max(hi[c], (*set)[i][c]);
      }
  double s = 0.0;
  for (std::size_t c = 0; c < d; ++c) s += (hi[c] - lo[c]) * (hi[c] - lo[c]);
  return std::sqrt(s);
}

std::size_t split_reference_count(std::size_t t) { return (t + 1) / 2; }

void check_k(std::size_t k, std::size_t m1, std::size_t m2) {
  if (k == 0) throw Error("k must be positive");
  if (k > m1 || k > m2)
    throw Error("k = " + std::to_string(k) + " exceeds available neighbors (M1 = " + std::to_string(m1) +
                ", M2 = " + std::to_string(m2) + ")");
}

}  // namespace

NeighborIndex::NeighborIndex(PointSet refs, QueryStrategy strategy) : refs_(std::move(refs)) {
  use_tree_ = strategy == QueryStrategy::KdTree ||
              (strategy == QueryStrategy::Auto && refs_.dim() <= kMaxTreeDim);
  order_.resize(refs_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (use_tree_ && !order_.empty()) build(0, order_.size());
}

int NeighborIndex::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  const std::size_t d = refs_.dim();
  std::size_t axis = 0;
  double widest = -1.0;
  for (std::size_t c = 0; c < d; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = refs_[order_[i]][c];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = c;
    }
  }
  if (widest <= 0.0) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  auto key = [&](std::size_t idx) { return refs_[idx][axis]; };
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  nodes_[id].axis = axis;
  nodes_[id].split = key(order_[mid]);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NeighborIndex::scan(std::size_t begin, std::size_t end, std::span<const double> query, std::size_t k,
                         std::optional<std::size_t> exclude, std::vector<double>& heap) const {
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t idx = order_[i];
    if (exclude && idx == *exclude) continue;
    offer(heap, k, squared_distance(query, refs_[idx]));
  }
}

void NeighborIndex::search(int node, std::span<const double> query, std::size_t k,
                           std::optional<std::size_t> exclude, std::vector<double>& heap) const {
  const Node& n = nodes_[node];
  if (n.left < 0) {
    scan(n.begin, n.end, query, k, exclude, heap);
    return;
  }
  const double diff = query[n.axis] - n.split;
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  search(near, query, k, exclude, heap);
  if (heap.size() < k || diff * diff <= heap.front()) search(far, query, k, exclude, heap);
}

std::vector<double> NeighborIndex::nearest_distances(std::span<const double> query, std::size_t k,
                                                     std::optional<std::size_t> exclude) const {
  if (query.size() != refs_.dim()) throw Error("query has wrong dimension");
  const std::size_t eligible = refs_.size() - (exclude && *exclude < refs_.size() ? 1 : 0);
  if (k == 0) throw Error("k must be positive");
  if (k > eligible)
    throw Error("k = " + std::to_string(k) + " exceeds eligible reference count " + std::to_string(eligible));
  std::vector<double> heap;
  heap.reserve(k);
  if (use_tree_)
    search(0, query, k, exclude, heap);
  else
    scan(0, order_.size(), query, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end());
  for (double& v : heap) v = std::sqrt(v);
  return heap;
}

double kth_neighbor_distance(const NeighborIndex& index, std::span<const double> query, std::size_t k,
                             std::optional<std::size_t> exclude) {
  return index.nearest_distances(query, k, exclude).back();
}

double unit_ball_volume(std::size_t d) {
  const double h = static_cast<double>(d) / 2.0;
  return std::exp(h * std::log(std::numbers::pi) - std::lgamma(h + 1.0));
}

double knn_density(std::size_t k, std::size_t M, std::size_t d, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error("knn_density requires a positive finite radius");
  if (k == 0 || M == 0 || d == 0) throw Error("knn_density requires positive k, M and d");
  const double dd = static_cast<double>(d);
  const double log_f = std::log(static_cast<double>(k)) - std::log(static_cast<double>(M)) +
                       std::lgamma(dd / 2.0 + 1.0) - dd / 2.0 * std::log(std::numbers::pi) - dd * std::log(rho);
  return std::exp(log_f);
}

std::pair<std::size_t, std::size_t> reference_counts(const TwoSampleData& data, EstimationMode mode) {
  const std::size_t n1 = data.f1.size();
  const std::size_t n2 = data.f2.size();
  if (mode == EstimationMode::Loo) return {n1, n2 == 0 ? 0 : n2 - 1};
  return {n1, split_reference_count(n2)};
}

std::pair<std::size_t, std::size_t> reference_counts(const DistanceData& data, EstimationMode mode) {
  const std::size_t n1 = data.count(1);
  const std::size_t n2 = data.count(2);
  if (mode == EstimationMode::Loo) return {n1, n2 == 0 ? 0 : n2 - 1};
  return {n1, split_reference_count(n2)};
}

NeighborProfiles build_neighbor_profiles(const TwoSampleData& data, std::size_t k_max, EstimationMode mode,
                                         QueryStrategy strategy) {
  data.validate();
  const auto [m1, m2] = reference_counts(data, mode);
  check_k(k_max, m1, m2);

  const std::size_t t2 = data.f2.size();
  const std::size_t n_eval = mode == EstimationMode::Loo ? t2 : t2 - m2;
  if (n_eval == 0) throw Error("no evaluation points");

  PointSet class2_refs(data.dim());
  if (mode == EstimationMode::Loo) {
    class2_refs = data.f2;
  } else {
    class2_refs.reserve(m2);
    for (std::size_t i = n_eval; i < t2; ++i) class2_refs.push_back(data.f2[i]);
  }
  const NeighborIndex index1(data.f1, strategy);
  const NeighborIndex index2(std::move(class2_refs), strategy);

  NeighborProfiles p;
  p.dim = data.dim();
  p.n_eval = n_eval;
  p.k_max = k_max;
  p.m1 = m1;
  p.m2 = m2;
  p.eps_dup = kDuplicateScale * bounding_diagonal(data);
  p.rho1.resize(n_eval * k_max);
  p.rho2.resize(n_eval * k_max);
  parallel_for(n_eval, [&](std::size_t i) {
    const auto q = data.f2[i];
    const auto r1 = index1.nearest_distances(q, k_max);
    const auto r2 = mode == EstimationMode::Loo ? index2.nearest_distances(q, k_max, i)
                                                : index2.nearest_distances(q, k_max);
    std::copy(r1.begin(), r1.end(), p.rho1.begin() + static_cast<std::ptrdiff_t>(i * k_max));
    std::copy(r2.begin(), r2.end(), p.rho2.begin() + static_cast<std::ptrdiff_t>(i * k_max));
  });
  return p;
}

NeighborProfiles build_neighbor_profiles(const DistanceData& data, std::size_t k_max, EstimationMode mode) {
  data.validate();
  if (!data.intrinsic_dim) throw Error("k-NN estimation from distances needs an intrinsic dimension");
  const auto [m1, m2] = reference_counts(data, mode);
  check_k(k_max, m1, m2);

  std::vector<std::size_t> class1;
  std::vector<std::size_t> class2;
  for (std::size_t i = 0; i < data.n; ++i) (data.labels[i] == 1 ? class1 : class2).push_back(i);
  const std::size_t n_eval = mode == EstimationMode::Loo ? class2.size() : class2.size() - m2;
  if (n_eval == 0) throw Error("no evaluation points");
  const std::span<const std::size_t> refs2 =
      mode == EstimationMode::Loo ? std::span<const std::size_t>(class2)
                                  : std::span<const std::size_t>(class2).subspan(n_eval);

  NeighborProfiles p;
  p.dim = static_cast<std::size_t>(*data.intrinsic_dim);
  p.n_eval = n_eval;
  p.k_max = k_max;
  p.m1 = m1;
  p.m2 = m2;
  p.eps_dup = kDuplicateScale * *std::max_element(data.dist.begin(), data.dist.end());
  p.rho1.resize(n_eval * k_max);
  p.rho2.resize(n_eval * k_max);

  auto fill = [&](std::size_t row, std::span<const std::size_t> refs, bool self_excluded, double* out) {
    std::vector<double> d;
    d.reserve(refs.size());
    for (std::size_t j : refs)
      if (!(self_excluded && j == row)) d.push_back(data(row, j));
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_max), d.end());
    std::copy_n(d.begin(), k_max, out);
  };
  parallel_for(n_eval, [&](std::size_t i) {
    const std::size_t row = class2[i];
    fill(row, class1, false, p.rho1.data() + i * k_max);
    fill(row, refs2, mode == EstimationMode::Loo, p.rho2.data() + i * k_max);
  });
  return p;
}

std::vector<DensityPair> density_pairs(const NeighborProfiles& p, std::size_t k) {
  if (k == 0 || k > p.k_max) throw Error("k outside the profiled range");
  const double dd = static_cast<double>(p.dim);
  const double log_ratio = std::log(static_cast<double>(p.m2)) - std::log(static_cast<double>(p.m1));
  constexpr double kMaxLog = 700.0;
  std::vector<DensityPair> out(p.n_eval);
  for (std::size_t i = 0; i < p.n_eval; ++i) {
    double r1 = p.rho1[i * p.k_max + k - 1];
    double r2 = p.rho2[i * p.k_max + k - 1];
    DensityPair& dp = out[i];
    dp.duplicate = r1 <= 0.0 || r2 <= 0.0;
    if (r1 <= 0.0) r1 = p.eps_dup;
    if (r2 <= 0.0) r2 = p.eps_dup;
    dp.k = k;
    dp.m1 = p.m1;
    dp.m2 = p.m2;
    dp.f1 = knn_density(k, p.m1, p.dim, r1);
    dp.f2 = knn_density(k, p.m2, p.dim, r2);
    // Ratio from logs so that an overflowing density cannot make t inf/nan.
    const double log_t = std::clamp(log_ratio + dd * (std::log(r2) - std::log(r1)), -kMaxLog, kMaxLog);
    dp.t = std::exp(log_t);
  }
  return out;
}

std::vector<DensityPair> density_profiles(const TwoSampleData& data, std::size_t k, EstimationMode mode) {
  return density_pairs(build_neighbor_profiles(data, k, mode), k);
}

std::vector<DensityPair> density_profiles(const DistanceData& data, std::size_t k, EstimationMode mode) {
  return density_pairs(build_neighbor_profiles(data, k, mode), k);
}

}  // namespace metabound
