#include "metabound/ensemble.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "metabound/error.hpp"

namespace metabound {

namespace {

constexpr double kMaxCondition = 1e12;

// Constraint rows: the all-ones row, then l^{j/d} for j = 1..d-1.
Eigen::MatrixXd constraint_matrix(const std::vector<double>& ell, std::size_t d) {
  const auto L = static_cast<Eigen::Index>(ell.size());
  const auto rows = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd a(rows, L);
  for (Eigen::Index c = 0; c < L; ++c) {
    a(0, c) = 1.0;
    for (Eigen::Index j = 1; j < rows; ++j)
      a(j, c) = std::pow(ell[static_cast<std::size_t>(c)], static_cast<double>(j) / static_cast<double>(d));
  }
  return a;
}

WeightVector finalize(const Eigen::MatrixXd& a, const Eigen::VectorXd& w) {
  WeightVector out;
  out.w.assign(w.data(), w.data() + w.size());
  const Eigen::VectorXd r = a * w;
  out.constraint_residuals.resize(static_cast<std::size_t>(r.size()));
  out.constraint_residuals[0] = std::abs(r(0) - 1.0);
  for (Eigen::Index j = 1; j < r.size(); ++j) out.constraint_residuals[static_cast<std::size_t>(j)] = std::abs(r(j));
  out.norm = w.norm();
  return out;
}

Eigen::VectorXd exact_null_weights(const Eigen::MatrixXd& a) {
  using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const MatrixXld al = a.cast<long double>();
  const MatrixXld gram = al * al.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.cast<double>(), Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw Error("ill-conditioned weight system (condition number " + std::to_string(lo > 0.0 ? hi / lo : INFINITY) +
                " > 1e12); choose a more widely spread l grid");
  VectorXld b = VectorXld::Zero(a.rows());
  b(0) = 1.0L;
  const auto solver = gram.colPivHouseholderQr();
  VectorXld y = solver.solve(b);
  // One refinement step keeps the residuals near machine precision.
  y += solver.solve(b - gram * y);
  return (al.transpose() * y).cast<double>();
}

// Euclidean projection onto {sum w = 1} intersected with {||w|| <= eta}.
Eigen::VectorXd project(Eigen::VectorXd w, double eta) {
  const double L = static_cast<double>(w.size());
  w.array() -= (w.sum() - 1.0) / L;
  const Eigen::VectorXd center = Eigen::VectorXd::Constant(w.size(), 1.0 / L);
  const double radius = std::sqrt(std::max(0.0, eta * eta - 1.0 / L));
  const Eigen::VectorXd offset = w - center;
  const double len = offset.norm();
  if (len > radius) w = center + offset * (radius / len);
  return w;
}

Eigen::VectorXd relaxed_weights(const Eigen::MatrixXd& a, const Eigen::VectorXd& row_scale, double eta,
                                double tolerance) {
  const Eigen::Index L = a.cols();
  const Eigen::MatrixXd basis = row_scale.asDiagonal() * a.bottomRows(a.rows() - 1);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(L, 1.0 / static_cast<double>(L));
  if (basis.rows() == 0) return w;

  auto objective = [&](const Eigen::VectorXd& v, Eigen::Index& arg) {
    return (basis * v).cwiseAbs().maxCoeff(&arg);
  };
  Eigen::VectorXd best = w;
  Eigen::Index arg = 0;
  double best_value = objective(w, arg);
  constexpr int kMaxIterations = 20000;
  for (int it = 0; it < kMaxIterations && best_value > tolerance; ++it) {
    const double value = objective(w, arg);
    const double sign = (basis.row(arg) * w)(0) >= 0.0 ? 1.0 : -1.0;
    Eigen::VectorXd g = sign * basis.row(arg).transpose();
    g.array() -= g.mean();  // stay on the sum-to-one hyperplane
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) break;
    // Polyak step aimed at the tolerance level.
    w = project(w - (value - 0.5 * tolerance) / g2 * g, eta);
    const double next = objective(w, arg);
    if (next < best_value) {
      best_value = next;
      best = w;
    }
  }
  return best;
}

}  // namespace

std::vector<double> default_ell(std::size_t d) {
  const std::size_t L = std::max<std::size_t>(d, 3);
  std::vector<double> ell(L);
  for (std::size_t i = 0; i < L; ++i) ell[i] = 0.3 + 2.7 * static_cast<double>(i) / static_cast<double>(L - 1);
  return ell;
}

WeightVector solve_weights(const std::vector<double>& ell, std::size_t d, WeightMode mode,
                           std::optional<std::size_t> sample_size, const EnsembleConfig& tuning) {
  if (d == 0) throw Error("dimension must be positive");
  if (ell.empty()) throw Error("empty l grid");
  for (double l : ell)
    if (!(l > 0.0) || !std::isfinite(l)) throw Error("l values must be positive");
  auto sorted = ell;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw Error("l values must be distinct");

  const Eigen::MatrixXd a = constraint_matrix(ell, d);
  if (mode == WeightMode::ExactNull) {
    if (ell.size() <= d - 1)
      throw Error("infeasible weight system: need L > d - 1 (L = " + std::to_string(ell.size()) +
                  ", d = " + std::to_string(d) + ")");
    return finalize(a, exact_null_weights(a));
  }

  const double eta = tuning.relaxed_eta;
  if (eta * eta < 1.0 / static_cast<double>(ell.size()))
    throw Error("relaxed weight budget eta is below the uniform-weight norm");
  // Basis term j contributes w . l^{j/d} * M^{-j/(2d)} to the bias; scaling
  // row j by M^{1/2 - j/(2d)} measures it against the parametric rate.
  Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(a.rows() - 1);
  double tolerance = 1e-8;
  if (sample_size) {
    const double m = static_cast<double>(*sample_size);
    for (Eigen::Index j = 1; j < a.rows(); ++j)
      row_scale(j - 1) = std::pow(m, 0.5 - static_cast<double>(j) / (2.0 * static_cast<double>(d)));
    tolerance = tuning.relaxed_epsilon;
  }
  return finalize(a, relaxed_weights(a, row_scale, eta, tolerance));
}

std::vector<std::size_t> neighbor_counts(const std::vector<double>& ell, std::size_t M) {
  if (M < 2) throw Error("need at least two reference points per class");
  std::vector<std::size_t> ks;
  ks.reserve(ell.size());
  const double root = std::sqrt(static_cast<double>(M));
  for (double l : ell) {
    const double raw = std::floor(l * root + 0.5);
    ks.push_back(static_cast<std::size_t>(std::clamp(raw, 1.0, static_cast<double>(M - 1))));
  }
  auto sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end())
    throw Error("two l values map to the same k = " + std::to_string(*dup) + " (M = " + std::to_string(M) +
                "); use a wider l spread");
  return ks;
}

double base_estimate(const std::vector<DensityPair>& pairs, const FunctionalSpec& spec) {
  if (pairs.empty()) throw Error("no evaluation points");
  double sum = 0.0;
  for (const auto& p : pairs) sum += phi_eval(spec, p.t);
  return sum / static_cast<double>(pairs.size());
}

double base_estimate(const TwoSampleData& data, const FunctionalSpec& spec, std::size_t k, EstimationMode mode) {
  spec.validate();
  return base_estimate(density_profiles(data, k, mode), spec);
}

EnsembleEstimator::EnsembleEstimator(const TwoSampleData& data, const EnsembleConfig& config, EstimationMode mode) {
  data.validate();
  const auto [m1, m2] = reference_counts(data, mode);
  prepare(data.dim(), std::min(m1, m2), config);
  profiles_ = build_neighbor_profiles(data, *std::max_element(ks_.begin(), ks_.end()), mode);
  finish();
}

EnsembleEstimator::EnsembleEstimator(const DistanceData& data, const EnsembleConfig& config, EstimationMode mode) {
  data.validate();
  if (!data.intrinsic_dim) throw Error("k-NN estimation from distances needs an intrinsic dimension");
  const auto [m1, m2] = reference_counts(data, mode);
  prepare(static_cast<std::size_t>(*data.intrinsic_dim), std::min(m1, m2), config);
  profiles_ = build_neighbor_profiles(data, *std::max_element(ks_.begin(), ks_.end()), mode);
  finish();
}

void EnsembleEstimator::prepare(std::size_t d, std::size_t M, const EnsembleConfig& config) {
  ell_ = config.ell.empty() ? default_ell(d) : config.ell;
  weights_ = solve_weights(ell_, d, config.mode, M, config);
  ks_ = neighbor_counts(ell_, M);
}

void EnsembleEstimator::finish() {
  pairs_.clear();
  std::vector<bool> flagged(profiles_.n_eval, false);
  for (std::size_t k : ks_) {
    pairs_.push_back(density_pairs(profiles_, k));
    for (std::size_t i = 0; i < profiles_.n_eval; ++i)
      if (pairs_.back()[i].duplicate) flagged[i] = true;
  }
  duplicate_count_ = static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true));
}

EnsembleResult EnsembleEstimator::estimate(const FunctionalSpec& spec) const {
  spec.validate();
  EnsembleResult out;
  out.ks = ks_;
  out.weights = weights_;
  out.base_values.reserve(ks_.size());
  for (std::size_t s = 0; s < ks_.size(); ++s) {
    const double base = base_estimate(pairs_[s], spec);
    out.base_values.push_back(base);
    out.value += weights_.w[s] * base;
  }
  return out;
}

double ensemble_estimate(const TwoSampleData& data, const FunctionalSpec& spec, const EnsembleConfig& config,
                         EstimationMode mode) {
  return EnsembleEstimator(data, config, mode).estimate(spec).value;
}

}  // namespace metabound
