#pragma once

#include <span>
#include <vector>

#include "rdot/measures.hpp"

namespace rdot {

struct SinkhornOptions {
  /// Target L1 violation of either marginal.
  double tol = 1e-9;
  int max_iter = 100000;
  /// After `newton_after` sweeps, precede each sweep with a damped Newton
  /// step on the dual. Costs a dense solve per sweep; meant for small
  /// problems with nearly block-diagonal plans where plain sweeps stall.
  bool newton = false;
  int newton_after = 10;
};

/**
 * @brief Entropic OT solution.
 *
 * The coupling factorizes as mu_i * nu_j * exp((f_i + g_j - d_ij) / eps);
 * u = exp(f / eps) and v = exp(g / eps) are the usual scaling vectors.
 */
struct SinkhornResult {
  Coupling coupling;
  std::vector<double> f{};
  std::vector<double> g{};
  double eps = 0.0;
  double transport_cost = 0.0;
  double kl_term = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
};

/**
 * @brief Log-domain Sinkhorn-Knopp for S_eps(mu, nu).
 *
 * Each sweep updates f (rows exact), measures the L1 violation of the column
 * marginal, then updates g. The final g update is the column rounding pass,
 * so the reported coupling matches nu up to roundoff and mu up to `tol`.
 * Zero-weight atoms and +inf costs are excluded from every log-sum-exp.
 *
 * Throws std::invalid_argument if eps <= 0, on shape mismatch, or if some
 * supported atom has no finite-cost partner.
 */
SinkhornResult sinkhorn(const DiscreteDistribution& mu,
                        const DiscreteDistribution& nu,
                        const DistortionMatrix& d, double eps,
                        const SinkhornOptions& options = {});

/// Same, starting from column potentials `initial_g` instead of zeros.
SinkhornResult sinkhorn(const DiscreteDistribution& mu,
                        const DiscreteDistribution& nu,
                        const DistortionMatrix& d, double eps,
                        const SinkhornOptions& options,
                        std::span<const double> initial_g);

/// Solves for each eps in turn, warm-starting from the previous potentials.
std::vector<SinkhornResult> sinkhorn_eps_sweep(
    const DiscreteDistribution& mu, const DiscreteDistribution& nu,
    const DistortionMatrix& d, std::span<const double> eps_list,
    const SinkhornOptions& options = {});

/// Worst relative deviation of the coupling from its Gibbs factorization,
/// over entries above `floor`.
double factorization_residual(const SinkhornResult& r,
                              const DiscreteDistribution& mu,
                              const DiscreteDistribution& nu,
                              const DistortionMatrix& d, double floor = 1e-14);

}  // namespace rdot
