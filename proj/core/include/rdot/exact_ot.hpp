#pragma once

#include <span>
#include <vector>

#include "rdot/measures.hpp"

namespace rdot {

/// Optimal transportation plan with its dual certificate.
struct EmdResult {
  Matrix coupling;
  double cost = 0.0;
  std::vector<double> dual_row;
  std::vector<double> dual_col;
};

/// Worst violation of dual_row[i] + dual_col[j] <= d(i, j) (0 when feasible).
double dual_infeasibility(const EmdResult& r, const DistortionMatrix& d);
/// Worst |dual_row[i] + dual_col[j] - d(i, j)| over cells carrying mass
/// above `mass_threshold`.
double slackness_violation(const EmdResult& r, const DistortionMatrix& d,
                           double mass_threshold = 1e-12);

/**
 * @brief Earth Mover's Distance between two discrete measures.
 *
 * Solves the transportation problem as min-cost flow with successive shortest
 * augmenting paths (Dijkstra on reduced costs). Ties between equally short
 * labels go to the lowest node index, so results are deterministic.
 * Zero-weight atoms are removed before solving and come back as empty
 * rows/columns whose duals are chosen to keep the certificate feasible.
 *
 * Throws std::invalid_argument on a non-finite cost, a shape mismatch, or
 * total masses that differ by more than 1e-10.
 */
EmdResult emd(std::span<const double> supply, std::span<const double> demand,
              const DistortionMatrix& d);
EmdResult emd(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
              const DistortionMatrix& d);

}  // namespace rdot
