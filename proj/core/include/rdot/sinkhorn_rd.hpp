#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rdot/measures.hpp"
#include "rdot/sinkhorn.hpp"

namespace rdot {

struct SinkhornRdOptions {
  /// Stop when the simplex-projected gradient of the Lagrangian falls below
  /// this (nats).
  double outer_tol = 1e-7;
  int outer_max_iter = 20000;
  /// Or when one accepted step changes the Lagrangian by at most this
  /// relative amount.
  double relative_change_tol = 1e-12;
  SinkhornOptions inner{1e-10, 2000, true};
  /// Precondition the multiplicative step with the Hessian obtained by
  /// differentiating the Sinkhorn fixed point. Off gives plain
  /// exponentiated gradient.
  bool curvature = true;
  /// Called with (iteration, Lagrangian) after each accepted step.
  std::function<void(int, double)> on_iteration;
};

enum class OuterStop {
  kGradient,
  kObjectiveChange,
  kLineSearchStall,
  kMaxIterations,
  kInnerFailure,
};

const char* to_string(OuterStop s);

/// One point of S(D) with the minimizing output marginal.
struct SinkhornRdResult {
  RDPoint point;
  DiscreteDistribution q_y;
  SinkhornResult inner;
  int outer_iterations = 0;
  /// Simplex-projected gradient sup-norm at the last accepted iterate.
  double outer_gradient_norm = 0.0;
  /// max - min of lambda * g over the support of q_y; zero when the
  /// Sinkhorn plan has the Blahut-Arimoto form.
  double potential_spread = 0.0;
  OuterStop stop = OuterStop::kMaxIterations;
  bool converged = false;
};

/**
 * @brief Minimizes Q -> S_{1/lambda}(P_X, Q) over weights on a fixed
 * reproduction grid.
 *
 * The objective is handled as the Lagrangian lambda * S = KL + lambda * E[d],
 * whose gradient in Q is lambda * g (g the Sinkhorn column potential).
 * Exponentiated-gradient steps with Armijo backtracking; weights are clamped
 * at 1e-12 while iterating and pruned below 1e-10 before the final solve.
 */
SinkhornRdResult sinkhorn_rd_point(const DiscreteDistribution& p_x,
                                   const DistortionMatrix& d, double lambda,
                                   const SinkhornRdOptions& options = {});

/// Warm-started variant: initial output weights and Sinkhorn potentials.
SinkhornRdResult sinkhorn_rd_point(const DiscreteDistribution& p_x,
                                   const DistortionMatrix& d, double lambda,
                                   const SinkhornRdOptions& options,
                                   const DiscreteDistribution& initial_q,
                                   std::span<const double> initial_g);

RDCurve rd_sweep_sinkhorn(const DiscreteDistribution& p_x,
                          const DistortionMatrix& d,
                          std::span<const double> lambdas,
                          const SinkhornRdOptions& options = {});

struct CouplingConditionReport {
  /// sum_x P(x) e^{-lambda d(x,y)} / sum_y' q(y') e^{-lambda d(x,y')} - 1
  /// for every output letter.
  std::vector<double> residuals;
  /// Worst |residual| over letters with q(y) above the support floor, and
  /// worst positive residual over the rest (a letter outside the support
  /// only breaks optimality if it would gain mass).
  double max_abs_residual = 0.0;
};

/// Whether the Gibbs conditional built on q_y reproduces q_y as its output
/// marginal, letter by letter. Letters at or below `support_floor` count as
/// extinct; Blahut-Arimoto leaves dying letters there long before they
/// reach zero.
CouplingConditionReport coupling_condition_check(
    const DiscreteDistribution& p_x, const DiscreteDistribution& q_y,
    const DistortionMatrix& d, double lambda, double support_floor = 1e-6);

}  // namespace rdot
