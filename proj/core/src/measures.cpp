#include "rdot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rdot {

namespace {

void validate_weights(const std::vector<double>& w) {
  if (w.empty()) {
    throw std::invalid_argument("distribution has no atoms");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw std::invalid_argument("weight " + std::to_string(i) +
                                  " is negative or not finite");
    }
    total += w[i];
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::invalid_argument("weights sum to " + std::to_string(total) +
                                ", expected 1");
  }
}

std::vector<double> rescale(std::vector<double> w) {
  double total = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) {
      throw std::invalid_argument("weights must be finite and nonnegative");
    }
    total += x;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("weights have zero total mass");
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  validate_weights(weights_);
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> atoms,
                                           std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  validate_weights(weights_);
  if (atoms_->size() != weights_.size()) {
    throw std::invalid_argument("atoms and weights differ in length");
  }
  for (double a : *atoms_) {
    if (!std::isfinite(a)) throw std::invalid_argument("atom is not finite");
  }
}

DiscreteDistribution DiscreteDistribution::normalized(
    std::vector<double> weights) {
  return DiscreteDistribution(rescale(std::move(weights)));
}

DiscreteDistribution DiscreteDistribution::normalized(
    std::vector<double> atoms, std::vector<double> weights) {
  return DiscreteDistribution(std::move(atoms), rescale(std::move(weights)));
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform over zero atoms");
  return DiscreteDistribution(
      std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

std::span<const double> DiscreteDistribution::atoms() const {
  if (!atoms_) return {};
  return *atoms_;
}

std::vector<std::size_t> DiscreteDistribution::support() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > kZeroWeight) idx.push_back(i);
  }
  return idx;
}

double DiscreteDistribution::mean() const {
  if (!atoms_) throw std::logic_error("mean of a categorical distribution");
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * (*atoms_)[i];
  return m;
}

double DiscreteDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double dx = (*atoms_)[i] - m;
    v += weights_[i] * dx * dx;
  }
  return v;
}

DistortionMatrix::DistortionMatrix(Matrix entries)
    : entries_(std::move(entries)) {
  if (entries_.size() == 0) {
    throw std::invalid_argument("distortion matrix is empty");
  }
  for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      const double v = entries_(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument(
            "distortion entry (" + std::to_string(i) + "," +
            std::to_string(j) + ") is negative or not finite");
      }
    }
  }
}

DistortionMatrix DistortionMatrix::signed_cost(Matrix entries) {
  if (entries.size() == 0) {
    throw std::invalid_argument("cost matrix is empty");
  }
  for (Eigen::Index j = 0; j < entries.cols(); ++j) {
    for (Eigen::Index i = 0; i < entries.rows(); ++i) {
      const double v = entries(i, j);
      if (std::isnan(v) || v == -std::numeric_limits<double>::infinity()) {
        throw std::invalid_argument("cost entry is NaN or -inf");
      }
    }
  }
  return DistortionMatrix(std::move(entries), Unchecked{});
}

bool DistortionMatrix::all_finite() const { return entries_.allFinite(); }

DistortionMatrix DistortionMatrix::transposed() const {
  return DistortionMatrix(entries_.transpose(), Unchecked{});
}

Coupling::Coupling(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.size() == 0) throw std::invalid_argument("coupling is empty");
  if (!entries_.allFinite() || entries_.minCoeff() < 0.0) {
    throw std::invalid_argument("coupling has negative or non-finite mass");
  }
  if (std::abs(entries_.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("coupling mass does not sum to 1");
  }
}

std::vector<double> Coupling::row_marginal() const {
  std::vector<double> r(static_cast<std::size_t>(rows()));
  for (Eigen::Index i = 0; i < rows(); ++i) r[i] = entries_.row(i).sum();
  return r;
}

std::vector<double> Coupling::col_marginal() const {
  std::vector<double> c(static_cast<std::size_t>(cols()));
  for (Eigen::Index j = 0; j < cols(); ++j) c[j] = entries_.col(j).sum();
  return c;
}

double Coupling::row_violation(std::span<const double> mu) const {
  if (mu.size() != static_cast<std::size_t>(rows())) {
    throw std::invalid_argument("row marginal length mismatch");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rows(); ++i) {
    worst = std::max(worst, std::abs(entries_.row(i).sum() - mu[i]));
  }
  return worst;
}

double Coupling::col_violation(std::span<const double> nu) const {
  if (nu.size() != static_cast<std::size_t>(cols())) {
    throw std::invalid_argument("column marginal length mismatch");
  }
  double worst = 0.0;
  for (Eigen::Index j = 0; j < cols(); ++j) {
    worst = std::max(worst, std::abs(entries_.col(j).sum() - nu[j]));
  }
  return worst;
}

RDCurve::RDCurve(std::vector<RDPoint> points) : points_(std::move(points)) {
  std::stable_sort(points_.begin(), points_.end(),
                   [](const RDPoint& a, const RDPoint& b) {
                     if (a.distortion != b.distortion) {
                       return a.distortion < b.distortion;
                     }
                     return a.lambda > b.lambda;
                   });
}

bool RDCurve::all_converged() const {
  return std::all_of(points_.begin(), points_.end(),
                     [](const RDPoint& p) { return p.converged; });
}

bool RDCurve::is_monotone(double slack) const {
  for (std::size_t k = 1; k < points_.size(); ++k) {
    if (points_[k].rate_nats > points_[k - 1].rate_nats + slack) return false;
  }
  return true;
}

DistortionMatrix squared_error_matrix(std::span<const double> x_atoms,
                                      std::span<const double> y_atoms) {
  if (x_atoms.empty() || y_atoms.empty()) {
    throw std::invalid_argument("squared_error_matrix needs non-empty atoms");
  }
  Matrix d(x_atoms.size(), y_atoms.size());
  for (std::size_t j = 0; j < y_atoms.size(); ++j) {
    for (std::size_t i = 0; i < x_atoms.size(); ++i) {
      const double diff = x_atoms[i] - y_atoms[j];
      d(i, j) = diff * diff;
    }
  }
  return DistortionMatrix(std::move(d));
}

DistortionMatrix hamming_matrix(std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) {
    throw std::invalid_argument("hamming_matrix needs n, m >= 1");
  }
  Matrix d = Matrix::Ones(n, m);
  for (std::size_t k = 0; k < std::min(n, m); ++k) d(k, k) = 0.0;
  return DistortionMatrix(std::move(d));
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double w : p) {
    if (w > kZeroWeight) h -= w * std::log(w);
  }
  return h;
}

double binary_entropy(double p) {
  const double q[2] = {p, 1.0 - p};
  return entropy(q);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_divergence: length mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= kZeroWeight) continue;
    if (q[i] <= kZeroWeight) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

double kl_divergence(const DiscreteDistribution& p,
                     const DiscreteDistribution& q) {
  return kl_divergence(p.weights(), q.weights());
}

double kl_to_product(const Matrix& joint, std::span<const double> mu,
                     std::span<const double> nu) {
  double kl = 0.0;
  for (Eigen::Index j = 0; j < joint.cols(); ++j) {
    for (Eigen::Index i = 0; i < joint.rows(); ++i) {
      const double p = joint(i, j);
      if (p <= kZeroWeight) continue;
      const double ref = mu[i] * nu[j];
      if (ref <= 0.0) return std::numeric_limits<double>::infinity();
      kl += p * std::log(p / ref);
    }
  }
  return kl;
}

double mutual_information(const Coupling& pi) {
  const auto mu = pi.row_marginal();
  const auto nu = pi.col_marginal();
  return std::max(kl_to_product(pi.matrix(), mu, nu), 0.0);
}

double expected_distortion(const Coupling& pi, const DistortionMatrix& d) {
  if (pi.rows() != d.rows() || pi.cols() != d.cols()) {
    throw std::invalid_argument("expected_distortion: shape mismatch");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < pi.cols(); ++j) {
    for (Eigen::Index i = 0; i < pi.rows(); ++i) {
      if (pi(i, j) > 0.0) total += pi(i, j) * d(i, j);
    }
  }
  return total;
}

double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    if (std::isfinite(x)) hi = std::max(hi, x);
  }
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) s += std::exp(x - hi);
  }
  return hi + std::log(s);
}

}  // namespace rdot
