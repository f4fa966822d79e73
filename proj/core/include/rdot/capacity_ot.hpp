#pragma once

#include <vector>

#include "rdot/measures.hpp"
#include "rdot/sinkhorn.hpp"

namespace rdot {

// EXPERIMENTAL. Evaluates the hypothesis C = 2 * max_r S_{1/2}(r(x), r(y))
// with cost d(x, y) = -log(p(y|x) / r(y)). Nothing here assumes the
// hypothesis holds; capacity_via_ot reports its distance from Arimoto's
// capacity.

/// Cost matrix restricted to output letters with r(y) > 0.
struct CapacityCost {
  /// -log(p(y|x) / r(y)); +inf where p(y|x) = 0.
  DistortionMatrix cost;
  /// Output letters kept, as indices into the channel's columns.
  std::vector<std::size_t> kept_columns;
  /// Output letters dropped because r(y) = 0.
  std::vector<std::size_t> dropped_columns;
  /// r(y) over the kept letters.
  DiscreteDistribution output;
};

/// r(y) = sum_x p(y|x) r(x) over every output letter.
DiscreteDistribution output_distribution(const Matrix& channel,
                                         const DiscreteDistribution& r);

CapacityCost capacity_cost_matrix(const Matrix& channel,
                                  const DiscreteDistribution& r);

struct CapacityValue {
  double value_nats = 0.0;
  bool converged = false;
};

/// 2 * S_{1/2}(r(x), r(y)) using Sinkhorn with infinite costs masked out.
CapacityValue capacity_sinkhorn_value(const Matrix& channel,
                                      const DiscreteDistribution& r,
                                      const SinkhornOptions& inner = {1e-12,
                                                                      100000});

struct CapacityOtOptions {
  double outer_tol = 1e-7;
  int outer_max_iter = 500;
  /// Central finite-difference step along simplex tangent directions.
  double fd_step = 1e-6;
  SinkhornOptions inner{1e-12, 100000};
};

struct CapacityOtResult {
  double value_nats = 0.0;
  DiscreteDistribution input_dist;
  DiscreteDistribution output_dist;
  /// Arimoto capacity of the same channel.
  double ba_reference = 0.0;
  /// value_nats - ba_reference.
  double discrepancy = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  static constexpr bool experimental = true;
};

/// Maximizes r -> capacity_sinkhorn_value by projected gradient ascent on
/// the simplex with finite-difference gradients, starting from uniform r.
CapacityOtResult capacity_via_ot(const Matrix& channel,
                                 const CapacityOtOptions& options = {});

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::vector<double> v);

}  // namespace rdot
