#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rdot/measures.hpp"

namespace rdot {

struct BaOptions {
  double tol = 1e-10;
  int max_iter = 1000000;
};

/// Blahut-Arimoto solution at one multiplier.
struct BaRdResult {
  RDPoint point;
  DiscreteDistribution q_y;
  /// Row-stochastic P(y|x).
  Matrix conditional;
  double fixed_point_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/**
 * @brief Optimal conditional for a fixed output marginal:
 * P(y|x) = q(y) exp(-lambda d(x,y)) / sum_y' q(y') exp(-lambda d(x,y')).
 *
 * Computed in the log domain; columns with q(y) = 0 stay zero.
 */
Matrix gibbs_conditional(std::span<const double> q, const DistortionMatrix& d,
                         double lambda);

/// min over P(y|x) of KL(P_X P(y|x) || P_X (x) q) + lambda E[d] for a fixed
/// output marginal q, i.e. -sum_x P(x) log sum_y q(y) e^{-lambda d(x,y)}.
double ba_inner_objective(const DiscreteDistribution& p_x,
                          std::span<const double> q, const DistortionMatrix& d,
                          double lambda);

/**
 * @brief R(D) at slope parameter lambda by alternating the conditional and
 * output-marginal updates, starting from a uniform output marginal.
 *
 * Output letters whose mass drops below 1e-15 are frozen at zero. Stops when
 * the sup over (x, y) with q(y) > 0 of |P(y|x) - gibbs_conditional(q)|
 * falls below options.tol. Throws std::invalid_argument if lambda <= 0 or
 * shapes disagree.
 */
BaRdResult ba_rd(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                 double lambda, const BaOptions& options = {});

/// As above from a caller-supplied starting output marginal (warm start).
BaRdResult ba_rd(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                 double lambda, const BaOptions& options,
                 const DiscreteDistribution& initial_q);

/// One point per lambda, warm-starting q_y from the previous lambda in the
/// order given.
RDCurve rd_sweep_ba(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                    std::span<const double> lambdas,
                    const BaOptions& options = {});

struct CapacityOptions {
  /// Stop when the upper/lower capacity bound gap is below this (nats).
  double tol = 1e-12;
  int max_iter = 1000000;
  /// Called after each update with (iteration, lower, upper) bounds.
  std::function<void(int, double, double)> on_iteration;
};

struct CapacityResult {
  double capacity_nats = 0.0;
  DiscreteDistribution input_dist;
  int iterations = 0;
  double bound_gap = 0.0;
  bool converged = false;
};

/// Throws std::invalid_argument unless every row sums to 1 within 1e-10 and
/// is nonnegative.
void validate_channel(const Matrix& channel);

/// I(X;Y) in nats for input r through the channel.
double channel_mutual_information(const Matrix& channel,
                                  std::span<const double> r);

/// Arimoto's alternating maximization for channel capacity.
CapacityResult ba_capacity(const Matrix& channel,
                           const CapacityOptions& options = {});

}  // namespace rdot
