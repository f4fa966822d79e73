#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rdot/measures.hpp"

namespace rdot {

/// M-level scalar quantizer for a source with atoms (squared error).
struct Quantizer {
  std::vector<double> codebook;
  /// Codeword index per source atom.
  std::vector<std::size_t> assignment;
  double distortion = 0.0;
  /// Mass carried by each codeword, located at the codebook.
  DiscreteDistribution induced_q;
  int iterations = 0;
  bool converged = true;
};

struct LloydOptions {
  double tol = 1e-12;
  int max_iter = 10000;
  int restarts = 20;
  std::uint64_t seed = 0x5eed;
  /// Called with (iteration, distortion) after each assignment step.
  std::function<void(int, double)> on_iteration;
};

/// Nearest codeword per atom; ties go to the lowest codeword index.
std::vector<std::size_t> nearest_codewords(std::span<const double> atoms,
                                           std::span<const double> codebook);

/// Assembles a Quantizer (distortion, induced masses) from a codebook and an
/// assignment.
Quantizer make_quantizer(const DiscreteDistribution& p_x,
                         std::vector<double> codebook,
                         std::vector<std::size_t> assignment);

/**
 * @brief Initial codebook of `levels` distinct atoms drawn by weighted
 * sampling without replacement (greedy k-means++ weights: mass times squared
 * distance to the atoms already drawn).
 *
 * Deterministic for a given seed.
 */
std::vector<double> sample_codebook(const DiscreteDistribution& p_x,
                                    std::size_t levels, std::uint64_t seed);

/// Lloyd-Max from a given initial codebook. An empty cell is re-seeded at the
/// atom with the largest distortion contribution.
Quantizer lloyd_max(const DiscreteDistribution& p_x,
                    std::vector<double> initial_codebook,
                    const LloydOptions& options = {});

/// Best of options.restarts Lloyd-Max runs from sampled codebooks.
Quantizer lloyd_max(const DiscreteDistribution& p_x, std::size_t levels,
                    const LloydOptions& options = {});

/// Globally optimal quantizer by dynamic programming over contiguous
/// partitions of the sorted atoms. Throws std::invalid_argument if levels < 1.
Quantizer kmeans_1d_exact(const DiscreteDistribution& p_x, std::size_t levels);

/**
 * @brief Minimizes W(P_X, Q) over distributions Q with at most `levels`
 * atoms, moving both locations and weights.
 *
 * For fixed locations the best weights send every atom to its nearest
 * codeword; the exact transport plan to those weights is solved and each
 * location moves to the barycenter of the mass it receives. Restarts follow
 * lloyd_max. Each returned quantizer is certified: its EMD cost must match
 * its distortion within 1e-9, otherwise std::runtime_error.
 */
Quantizer extremal_emd_quantizer(const DiscreteDistribution& p_x,
                                 std::size_t levels,
                                 const LloydOptions& options = {});

}  // namespace rdot
