#include "metabound/mst.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "metabound/error.hpp"

namespace metabound {

MstResult minimum_spanning_tree(std::size_t n, const std::function<double(std::size_t, std::size_t)>& weight,
                                const std::vector<int>& labels) {
  if (n < 2) throw Error("minimum spanning tree needs at least two nodes");
  if (labels.size() != n) throw Error("label count does not match node count");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> key(n, kInf);
  std::vector<std::size_t> parent(n, 0);
  std::vector<char> in_tree(n, 0);

  MstResult out;
  out.edges.reserve(n - 1);
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t added = 1; added < n; ++added) {
    std::size_t next = n;
    double best = kInf;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = weight(current, v);
      if (!std::isfinite(w)) throw Error("non-finite edge weight");
      if (w < key[v]) {
        key[v] = w;
        parent[v] = current;
      }
      if (next == n || key[v] < best) {
        best = key[v];
        next = v;
      }
    }
    in_tree[next] = 1;
    const std::size_t p = parent[next];
    out.edges.push_back({std::min(p, next), std::max(p, next), key[next]});
    out.total_weight += key[next];
    if (labels[p] != labels[next]) ++out.cross_count;
    current = next;
  }
  return out;
}

MstResult minimum_spanning_tree(const DistanceData& dist) {
  if (dist.n < 2) throw Error("minimum spanning tree needs at least two nodes");
  if (dist.dist.size() != dist.n * dist.n) throw Error("distance matrix is not n x n");
  return minimum_spanning_tree(
      dist.n, [&](std::size_t i, std::size_t j) { return dist(i, j); }, dist.labels);
}

MstResult minimum_spanning_tree(const TwoSampleData& data) {
  data.validate();
  const std::size_t n1 = data.f1.size();
  const std::size_t n = n1 + data.f2.size();
  std::vector<int> labels(n, 2);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n1), 1);
  auto point = [&](std::size_t i) { return i < n1 ? data.f1[i] : data.f2[i - n1]; };
  return minimum_spanning_tree(
      n,
      [&](std::size_t i, std::size_t j) {
        const auto a = point(i);
        const auto b = point(j);
        double s = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
        return std::sqrt(s);
      },
      labels);
}

double hp_dtilde_from_count(std::size_t cross_count, std::size_t m, std::size_t n, HpNormalization norm) {
  if (m == 0 || n == 0) throw Error("single class: both classes must be present");
  const double r = static_cast<double>(cross_count);
  const double dm = static_cast<double>(m);
  const double dn = static_cast<double>(n);
  const double raw = norm == HpNormalization::PriorWeighted ? 1.0 - r * (dm + dn) / (2.0 * dm * dn)
                                                            : 1.0 - 2.0 * r / (dm + dn);
  return std::clamp(raw, 0.0, 1.0);
}

double hp_dtilde_estimate(const DistanceData& dist, HpNormalization norm) {
  const std::size_t m = dist.count(1);
  const std::size_t n = dist.count(2);
  if (m == 0 || n == 0) throw Error("single class: both classes must be present");
  return hp_dtilde_from_count(minimum_spanning_tree(dist).cross_count, m, n, norm);
}

double hp_dtilde_estimate(const TwoSampleData& data, HpNormalization norm) {
  return hp_dtilde_from_count(minimum_spanning_tree(data).cross_count, data.f1.size(), data.f2.size(), norm);
}

void write_mst_edges(const std::string& path, const MstResult& mst, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << "i,j,weight,label_i,label_j\n" << std::setprecision(17);
  for (const auto& e : mst.edges) out << e.i << ',' << e.j << ',' << e.weight << ',' << labels[e.i] << ',' << labels[e.j] << '\n';
}

}  // namespace metabound
