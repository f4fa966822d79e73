#include "rdot/blahut_arimoto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rdot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Floor applied to a warm-start marginal so extinct letters can revive.
constexpr double kWarmStartFloor = 1e-6;

void check_inputs(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                  double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("ba_rd: lambda must be positive and finite");
  }
  if (static_cast<std::size_t>(d.rows()) != p_x.size()) {
    throw std::invalid_argument("ba_rd: distortion rows != source size");
  }
  if (!d.all_finite()) {
    throw std::invalid_argument("ba_rd: distortion must be finite");
  }
}

std::vector<double> output_marginal(const DiscreteDistribution& p_x,
                                    const Matrix& conditional) {
  std::vector<double> q(static_cast<std::size_t>(conditional.cols()), 0.0);
  for (Eigen::Index j = 0; j < conditional.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < conditional.rows(); ++i) {
      s += p_x[i] * conditional(i, j);
    }
    q[j] = s;
  }
  double total = 0.0;
  for (double& v : q) {
    if (v < kZeroWeight) v = 0.0;
    total += v;
  }
  for (double& v : q) v /= total;
  return q;
}

double conditional_gap(const Matrix& a, const Matrix& b,
                       std::span<const double> q) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (q[j] <= 0.0) continue;
    worst = std::max(worst, (a.col(j) - b.col(j)).cwiseAbs().maxCoeff());
  }
  return worst;
}

BaRdResult solve(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                 double lambda, const BaOptions& options,
                 const std::vector<double>& q) {
  Matrix cond = gibbs_conditional(q, d, lambda);
  std::vector<double> q_next;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  bool converged = false;
  while (it < options.max_iter) {
    ++it;
    q_next = output_marginal(p_x, cond);
    Matrix cond_next = gibbs_conditional(q_next, d, lambda);
    residual = conditional_gap(cond, cond_next, q_next);
    cond = std::move(cond_next);
    if (residual <= options.tol) {
      converged = true;
      break;
    }
  }
  // The conditional is the Gibbs form of q_y, so columns of extinct letters
  // are exactly zero.

  BaRdResult r{RDPoint{}, DiscreteDistribution::normalized(q_next), cond};
  Matrix joint = cond;
  for (Eigen::Index i = 0; i < joint.rows(); ++i) joint.row(i) *= p_x[i];
  r.point.lambda = lambda;
  r.point.rate_nats =
      std::max(kl_to_product(joint, p_x.weights(), r.q_y.weights()), 0.0);
  r.point.distortion = (joint.array() * d.matrix().array()).sum();
  r.point.converged = converged;
  r.fixed_point_residual = residual;
  r.iterations = it;
  r.converged = converged;
  return r;
}

}  // namespace

Matrix gibbs_conditional(std::span<const double> q, const DistortionMatrix& d,
                         double lambda) {
  if (q.size() != static_cast<std::size_t>(d.cols())) {
    throw std::invalid_argument("gibbs_conditional: length mismatch");
  }
  const Eigen::Index n = d.rows();
  const Eigen::Index m = d.cols();
  std::vector<double> log_q(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    log_q[j] = q[j] > 0.0 ? std::log(q[j]) : kNegInf;
  }
  Matrix out(n, m);
  std::vector<double> row(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      row[j] = log_q[j] - lambda * d(i, j);
    }
    const double log_z = log_sum_exp(row);
    for (Eigen::Index j = 0; j < m; ++j) {
      out(i, j) = std::isfinite(row[j]) ? std::exp(row[j] - log_z) : 0.0;
    }
  }
  return out;
}

double ba_inner_objective(const DiscreteDistribution& p_x,
                          std::span<const double> q, const DistortionMatrix& d,
                          double lambda) {
  if (q.size() != static_cast<std::size_t>(d.cols()) ||
      p_x.size() != static_cast<std::size_t>(d.rows())) {
    throw std::invalid_argument("ba_inner_objective: shape mismatch");
  }
  std::vector<double> row(q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p_x.size(); ++i) {
    if (p_x[i] <= kZeroWeight) continue;
    for (std::size_t j = 0; j < q.size(); ++j) {
      row[j] = q[j] > 0.0 ? std::log(q[j]) - lambda * d(i, j) : kNegInf;
    }
    total -= p_x[i] * log_sum_exp(row);
  }
  return total;
}

BaRdResult ba_rd(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                 double lambda, const BaOptions& options) {
  check_inputs(p_x, d, lambda);
  const auto m = static_cast<std::size_t>(d.cols());
  return solve(p_x, d, lambda, options,
               std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

BaRdResult ba_rd(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                 double lambda, const BaOptions& options,
                 const DiscreteDistribution& initial_q) {
  check_inputs(p_x, d, lambda);
  if (initial_q.size() != static_cast<std::size_t>(d.cols())) {
    throw std::invalid_argument("ba_rd: initial marginal length mismatch");
  }
  std::vector<double> q(initial_q.weights().begin(), initial_q.weights().end());
  return solve(p_x, d, lambda, options, std::move(q));
}

RDCurve rd_sweep_ba(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                    std::span<const double> lambdas,
                    const BaOptions& options) {
  if (lambdas.empty()) throw std::invalid_argument("rd_sweep_ba: no lambdas");
  std::vector<RDPoint> points;
  std::vector<double> warm;
  for (double lambda : lambdas) {
    const BaRdResult r =
        warm.empty() ? ba_rd(p_x, d, lambda, options)
                     : ba_rd(p_x, d, lambda, options,
                             DiscreteDistribution::normalized(warm));
    points.push_back(r.point);
    warm.assign(r.q_y.weights().begin(), r.q_y.weights().end());
    for (double& w : warm) w = std::max(w, kWarmStartFloor);
  }
  return RDCurve(std::move(points));
}

void validate_channel(const Matrix& channel) {
  if (channel.size() == 0) throw std::invalid_argument("channel is empty");
  if (!channel.allFinite() || channel.minCoeff() < 0.0) {
    throw std::invalid_argument("channel has negative or non-finite entries");
  }
  for (Eigen::Index i = 0; i < channel.rows(); ++i) {
    if (std::abs(channel.row(i).sum() - 1.0) > 1e-10) {
      throw std::invalid_argument("channel row " + std::to_string(i) +
                                  " does not sum to 1");
    }
  }
}

double channel_mutual_information(const Matrix& channel,
                                  std::span<const double> r) {
  Matrix joint = channel;
  for (Eigen::Index i = 0; i < joint.rows(); ++i) joint.row(i) *= r[i];
  std::vector<double> out(static_cast<std::size_t>(channel.cols()));
  for (Eigen::Index j = 0; j < channel.cols(); ++j) out[j] = joint.col(j).sum();
  return std::max(kl_to_product(joint, r, out), 0.0);
}

CapacityResult ba_capacity(const Matrix& channel,
                           const CapacityOptions& options) {
  validate_channel(channel);
  const auto n = static_cast<std::size_t>(channel.rows());
  const auto m = static_cast<std::size_t>(channel.cols());
  std::vector<double> r(n, 1.0 / static_cast<double>(n));
  std::vector<double> q(m);
  std::vector<double> divergence(n);
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  int it = 0;
  bool converged = false;

  while (it < options.max_iter) {
    ++it;
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += r[i] * channel(i, j);
      q[j] = s;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double kl = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double p = channel(i, j);
        if (p > 0.0) kl += p * std::log(p / q[j]);
      }
      divergence[i] = kl;
    }
    std::vector<double> weighted(n);
    for (std::size_t i = 0; i < n; ++i) {
      weighted[i] = r[i] > 0.0 ? std::log(r[i]) + divergence[i] : kNegInf;
    }
    const double log_norm = log_sum_exp(weighted);
    lower = std::max(log_norm, 0.0);
    upper = *std::max_element(divergence.begin(), divergence.end());
    if (options.on_iteration) options.on_iteration(it, lower, upper);
    if (upper - lower <= options.tol) {
      converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = std::exp(weighted[i] - log_norm);
    }
  }

  CapacityResult out{lower, DiscreteDistribution::normalized(r)};
  out.iterations = it;
  out.bound_gap = upper - lower;
  out.converged = converged;
  return out;
}

}  // namespace rdot
