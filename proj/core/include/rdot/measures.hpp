#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace rdot {

using Matrix = Eigen::MatrixXd;

/// Weights at or below this are treated as exact zeros in supports and
/// divergences.
inline constexpr double kZeroWeight = 1e-15;

/// Absolute tolerance on the total mass of a DiscreteDistribution.
inline constexpr double kMassTolerance = 1e-12;

/**
 * @brief Probability weights over finitely many atoms.
 *
 * Atoms are real locations (source units) and may be absent for purely
 * categorical alphabets. Validated on construction; instances are immutable.
 */
class DiscreteDistribution {
 public:
  /// Throws std::invalid_argument on negative/non-finite weights or a total
  /// mass further than kMassTolerance from 1.
  explicit DiscreteDistribution(std::vector<double> weights);
  DiscreteDistribution(std::vector<double> atoms, std::vector<double> weights);

  /// Rescales nonnegative weights to unit mass before validating.
  static DiscreteDistribution normalized(std::vector<double> weights);
  static DiscreteDistribution normalized(std::vector<double> atoms,
                                         std::vector<double> weights);
  static DiscreteDistribution uniform(std::size_t n);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  bool has_atoms() const { return atoms_.has_value(); }
  /// Empty span when the distribution is categorical.
  std::span<const double> atoms() const;

  /// Indices with weight above kZeroWeight.
  std::vector<std::size_t> support() const;

  double mean() const;
  double variance() const;

 private:
  std::optional<std::vector<double>> atoms_;
  std::vector<double> weights_;
};

/**
 * @brief Dense n x m cost matrix d(x_i, y_j).
 *
 * Regular distortion matrices are finite and nonnegative. Signed or infinite
 * costs (the log-likelihood costs of capacity_ot) go through signed_cost().
 */
class DistortionMatrix {
 public:
  explicit DistortionMatrix(Matrix entries);

  /// Accepts negative and +inf entries; NaN and -inf are still rejected.
  static DistortionMatrix signed_cost(Matrix entries);

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return entries_(i, j);
  }
  const Matrix& matrix() const { return entries_; }
  bool all_finite() const;
  DistortionMatrix transposed() const;

 private:
  struct Unchecked {};
  DistortionMatrix(Matrix entries, Unchecked) : entries_(std::move(entries)) {}

  Matrix entries_;
};

/// Joint probability matrix; marginals are taken from the entries.
class Coupling {
 public:
  explicit Coupling(Matrix entries);

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return entries_(i, j);
  }
  const Matrix& matrix() const { return entries_; }

  std::vector<double> row_marginal() const;
  std::vector<double> col_marginal() const;

  /// Worst absolute deviation of row/column sums from the given marginal.
  double row_violation(std::span<const double> mu) const;
  double col_violation(std::span<const double> nu) const;

 private:
  Matrix entries_;
};

/// A (lambda, R, D) point in nats and distortion units.
struct RDPoint {
  double lambda = 0.0;
  double rate_nats = 0.0;
  double distortion = 0.0;
  bool converged = true;
};

/// RD points sorted by ascending distortion.
class RDCurve {
 public:
  RDCurve() = default;
  explicit RDCurve(std::vector<RDPoint> points);

  const std::vector<RDPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool all_converged() const;
  /// Rate non-increasing in distortion up to `slack`.
  bool is_monotone(double slack = 1e-6) const;

 private:
  std::vector<RDPoint> points_;
};

DistortionMatrix squared_error_matrix(std::span<const double> x_atoms,
                                      std::span<const double> y_atoms);
DistortionMatrix hamming_matrix(std::size_t n, std::size_t m);

/// Shannon entropy in nats.
double entropy(std::span<const double> p);
/// Binary entropy in nats.
double binary_entropy(double p);

/// D(p||q) in nats; +inf when p is not absolutely continuous w.r.t. q.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const DiscreteDistribution& p,
                     const DiscreteDistribution& q);

/// KL of the coupling against the product of its own marginals.
double mutual_information(const Coupling& pi);

/// KL of `joint` against mu (x) nu. Entries with zero joint mass contribute 0.
double kl_to_product(const Matrix& joint, std::span<const double> mu,
                     std::span<const double> nu);

double expected_distortion(const Coupling& pi, const DistortionMatrix& d);

/// Numerically stable log(sum(exp(v))) over finite entries; -inf if none.
double log_sum_exp(std::span<const double> v);

}  // namespace rdot
