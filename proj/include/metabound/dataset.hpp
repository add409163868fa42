#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace metabound {

/// Row-major cloud of points of a fixed dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<double> operator[](std::size_t i) {
    return {coords_.data() + i * dim_, dim_};
  }

  void push_back(std::span<const double> point);
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// Labeled two-class sample: `f1` holds the class-1 points, `f2` the class-2
/// points. Class-2 points are the evaluation points of the plug-in estimators.
struct TwoSampleData {
  PointSet f1;
  PointSet f2;
  double q1 = 0.5;

  std::size_t dim() const { return f1.dim(); }
  double q2() const { return 1.0 - q1; }

  /// Empirical class-1 fraction.
  double empirical_q1() const;

  /// Throws Error unless both classes are non-empty, dimensions agree and
  /// q1 lies in (0, 1).
  void validate() const;
};

/// Pairwise dissimilarities of a labeled pooled sample. Labels are 1 or 2.
/// The triangle inequality is not assumed.
struct DistanceData {
  std::size_t n = 0;
  std::vector<double> dist;  // n*n, row-major
  std::vector<int> labels;
  /// Needed only by the k-NN estimators (volume normalization).
  std::optional<int> intrinsic_dim;
  /// Class-1 prior; empirical fraction when unset.
  std::optional<double> q1_override;

  double operator()(std::size_t i, std::size_t j) const { return dist[i * n + j]; }
  std::size_t count(int label) const;
  double q1() const;
  void validate() const;
};

struct GaussianSpec {
  std::size_t d = 1;
  std::vector<double> mu1;
  std::vector<double> mu2;
  double sigma = 1.0;
  double q1 = 0.5;
  std::size_t T = 0;  // per-class sample count
  std::uint64_t seed = 0;

  /// Isotropic pair separated by `delta` along the first axis, mu1 at the origin.
  static GaussianSpec separated(std::size_t d, double delta, std::size_t T, std::uint64_t seed,
                                double q1 = 0.5);

  /// ||mu1 - mu2|| / sigma.
  double separation() const;
  void validate() const;
};

struct CsvLoadOptions {
  std::string label_column = "label";
  std::optional<double> q1_override;
};

/// Reads a header-prefixed CSV whose label column holds exactly two distinct
/// values. The lexicographically smaller label (numerically smaller when both
/// parse as numbers) becomes class 1.
TwoSampleData load_labeled_csv(const std::string& path, const CsvLoadOptions& options = {});

/// Reads a square numeric matrix (no header) and a labels file with one tag per
/// line. Relative asymmetry up to 1e-9 is averaged away; more is an error.
DistanceData load_distance_matrix(const std::string& matrix_path, const std::string& labels_path,
                                  std::optional<int> intrinsic_dim);

/// Validates and symmetrizes an in-memory matrix with the same rules as
/// load_distance_matrix.
DistanceData make_distance_data(std::size_t n, std::vector<double> dist, std::vector<int> labels,
                                std::optional<int> intrinsic_dim);

TwoSampleData sample_gaussian_pair(const GaussianSpec& spec);

/// Standard normal CDF.
double normal_cdf(double x);

/// Bayes error of the isotropic equal-covariance pair described by `spec`.
double true_gaussian_ber(const GaussianSpec& spec);
double true_gaussian_ber(double delta, double q1);

/// Euclidean distances of the pooled sample, class-1 points first.
DistanceData pairwise_distances(const TwoSampleData& data);

/// Writes a matrix as CSV with 17 significant digits.
void write_distance_matrix(const std::string& path, const DistanceData& data);
void write_labels(const std::string& path, const DistanceData& data);

}  // namespace metabound
