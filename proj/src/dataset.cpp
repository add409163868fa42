#include "metabound/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "metabound/error.hpp"
#include "metabound/random.hpp"

namespace metabound {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  return in;
}

bool is_blank(const std::string& line) { return trim(line).empty(); }

}  // namespace

PointSet::PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0 || coords_.size() % dim_ != 0) throw Error("point coordinates do not match dimension");
}

void PointSet::push_back(std::span<const double> point) {
  if (point.size() != dim_) throw Error("point has wrong dimension");
  coords_.insert(coords_.end(), point.begin(), point.end());
}

double TwoSampleData::empirical_q1() const {
  const double n1 = static_cast<double>(f1.size());
  const double n2 = static_cast<double>(f2.size());
  return n1 / (n1 + n2);
}

void TwoSampleData::validate() const {
  if (f1.empty() || f2.empty()) throw Error("empty sample: both classes need at least one point");
  if (f1.dim() == 0 || f1.dim() != f2.dim()) throw Error("class dimensions disagree");
  if (!(q1 > 0.0 && q1 < 1.0)) throw Error("prior q1 must lie in (0, 1)");
}

std::size_t DistanceData::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

double DistanceData::q1() const {
  if (q1_override) return *q1_override;
  return static_cast<double>(count(1)) / static_cast<double>(n);
}

void DistanceData::validate() const {
  if (dist.size() != n * n) throw Error("distance matrix is not n x n");
  if (labels.size() != n) throw Error("label count does not match matrix size");
  for (int l : labels)
    if (l != 1 && l != 2) throw Error("labels must be 1 or 2");
  if (count(1) == 0 || count(2) == 0) throw Error("single class: both classes must be present");
  if (intrinsic_dim && *intrinsic_dim < 1) throw Error("intrinsic dimension must be >= 1");
  if (q1_override && !(*q1_override > 0.0 && *q1_override < 1.0))
    throw Error("prior q1 must lie in (0, 1)");
}

GaussianSpec GaussianSpec::separated(std::size_t d, double delta, std::size_t T, std::uint64_t seed,
                                     double q1) {
  GaussianSpec spec;
  spec.d = d;
  spec.mu1.assign(d, 0.0);
  spec.mu2.assign(d, 0.0);
  if (d > 0) spec.mu2[0] = delta;
  spec.T = T;
  spec.seed = seed;
  spec.q1 = q1;
  return spec;
}

double GaussianSpec::separation() const {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += (mu1[i] - mu2[i]) * (mu1[i] - mu2[i]);
  return std::sqrt(s) / sigma;
}

void GaussianSpec::validate() const {
  if (d == 0) throw Error("dimension must be positive");
  if (mu1.size() != d || mu2.size() != d) throw Error("mean vectors must have length d");
  if (!(sigma > 0.0)) throw Error("sigma must be positive");
  if (!(q1 > 0.0 && q1 < 1.0)) throw Error("prior q1 must lie in (0, 1)");
  if (T == 0) throw Error("empty sample: T must be positive");
}

TwoSampleData load_labeled_csv(const std::string& path, const CsvLoadOptions& options) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw Error("missing header row: " + path);
  const auto header = split_csv_line(line);
  const auto label_it = std::find(header.begin(), header.end(), options.label_column);
  if (label_it == header.end()) throw Error("label column '" + options.label_column + "' not found");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t d = header.size() - 1;
  if (d == 0) throw Error("no feature columns");

  std::vector<std::string> tags;
  std::vector<double> features;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (is_blank(line)) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw Error("ragged row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                  " cells, got " + std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        tags.push_back(cells[c]);
        continue;
      }
      auto v = parse_double(cells[c]);
      if (!v || !std::isfinite(*v))
        throw Error("non-numeric cell at row " + std::to_string(row) + ", column '" + header[c] + "'");
      features.push_back(*v);
    }
  }

  std::vector<std::string> distinct = tags;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw Error("single class: label column has fewer than two values");
  if (distinct.size() > 2) throw Error("more than two classes in label column");
  auto a = parse_double(distinct[0]);
  auto b = parse_double(distinct[1]);
  if (a && b && *b < *a) std::swap(distinct[0], distinct[1]);

  TwoSampleData data{PointSet(d), PointSet(d), 0.5};
  for (std::size_t i = 0; i < tags.size(); ++i) {
    std::span<const double> p(features.data() + i * d, d);
    (tags[i] == distinct[0] ? data.f1 : data.f2).push_back(p);
  }
  data.q1 = options.q1_override.value_or(data.empirical_q1());
  data.validate();
  return data;
}

DistanceData make_distance_data(std::size_t n, std::vector<double> dist, std::vector<int> labels,
                                std::optional<int> intrinsic_dim) {
  if (dist.size() != n * n) throw Error("non-square distance matrix");
  for (double v : dist) {
    if (!std::isfinite(v)) throw Error("non-finite distance");
    if (v < 0.0) throw Error("negative distance");
  }
  double scale = 0.0;
  for (double v : dist) scale = std::max(scale, v);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double& a = dist[i * n + j];
      double& b = dist[j * n + i];
      if (std::abs(a - b) > 1e-9 * scale)
        throw Error("asymmetric distance matrix at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      a = b = 0.5 * (a + b);
    }
    dist[i * n + i] = 0.0;
  }
  DistanceData out{n, std::move(dist), std::move(labels), intrinsic_dim, std::nullopt};
  out.validate();
  return out;
}

DistanceData load_distance_matrix(const std::string& matrix_path, const std::string& labels_path,
                                  std::optional<int> intrinsic_dim) {
  auto in = open_or_throw(matrix_path);
  std::vector<double> values;
  std::string line;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    const auto cells = split_csv_line(line);
    if (rows == 0) cols = cells.size();
    if (cells.size() != cols) throw Error("ragged row " + std::to_string(rows + 1) + " in distance matrix");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = parse_double(cells[c]);
      if (!v)
        throw Error("non-numeric cell at row " + std::to_string(rows + 1) + ", column " + std::to_string(c + 1));
      values.push_back(*v);
    }
    ++rows;
  }
  if (rows == 0 || rows != cols) throw Error("non-square distance matrix");

  auto lin = open_or_throw(labels_path);
  std::vector<int> labels;
  while (std::getline(lin, line)) {
    if (is_blank(line)) continue;
    auto v = parse_double(trim(line));
    if (!v || (*v != 1.0 && *v != 2.0)) throw Error("labels must be 1 or 2, got '" + trim(line) + "'");
    labels.push_back(static_cast<int>(*v));
  }
  if (labels.size() != rows) throw Error("label length mismatch");
  if (intrinsic_dim && *intrinsic_dim < 1) throw Error("intrinsic dimension must be >= 1");
  return make_distance_data(rows, std::move(values), std::move(labels), intrinsic_dim);
}

TwoSampleData sample_gaussian_pair(const GaussianSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](const std::vector<double>& mu) {
    std::vector<double> coords(spec.T * spec.d);
    for (std::size_t i = 0; i < spec.T; ++i)
      for (std::size_t j = 0; j < spec.d; ++j) coords[i * spec.d + j] = mu[j] + spec.sigma * normal(rng);
    return PointSet(spec.d, std::move(coords));
  };
  TwoSampleData data;
  data.f1 = draw(spec.mu1);
  data.f2 = draw(spec.mu2);
  data.q1 = spec.q1;
  return data;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double true_gaussian_ber(double delta, double q1) {
  if (!(q1 > 0.0 && q1 < 1.0)) throw Error("prior q1 must lie in (0, 1)");
  if (delta < 0.0) throw Error("separation must be nonnegative");
  const double q2 = 1.0 - q1;
  if (delta == 0.0) return std::min(q1, q2);
  // Project onto the mean-difference axis; the Bayes threshold sits at
  // delta/2 + ln(q2/q1)/delta from mu1.
  const double shift = std::log(q2 / q1) / delta;
  return q1 * normal_cdf(-delta / 2.0 + shift) + q2 * normal_cdf(-delta / 2.0 - shift);
}

double true_gaussian_ber(const GaussianSpec& spec) {
  if (spec.d == 0 || spec.mu1.size() != spec.d || spec.mu2.size() != spec.d || !(spec.sigma > 0.0))
    throw Error("invalid Gaussian spec");
  return true_gaussian_ber(spec.separation(), spec.q1);
}

DistanceData pairwise_distances(const TwoSampleData& data) {
  data.validate();
  const std::size_t n1 = data.f1.size();
  const std::size_t n = n1 + data.f2.size();
  auto point = [&](std::size_t i) { return i < n1 ? data.f1[i] : data.f2[i - n1]; };
  DistanceData out;
  out.n = n;
  out.dist.assign(n * n, 0.0);
  out.labels.resize(n);
  out.intrinsic_dim = static_cast<int>(data.dim());
  out.q1_override = data.q1;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = i < n1 ? 1 : 2;
    const auto a = point(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = point(j);
      double s = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
      out.dist[i * n + j] = out.dist[j * n + i] = std::sqrt(s);
    }
  }
  return out;
}

void write_distance_matrix(const std::string& path, const DistanceData& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < data.n; ++j) out << (j ? "," : "") << data(i, j);
    out << '\n';
  }
}

void write_labels(const std::string& path, const DistanceData& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  for (int l : data.labels) out << l << '\n';
}

}  // namespace metabound
