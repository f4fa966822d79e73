#include "rdot/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "rdot/exact_ot.hpp"

namespace rdot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cell {
  double location;
  double weight;
};

// Distinct positive-mass locations, sorted, with merged weights.
std::vector<Cell> distinct_cells(const DiscreteDistribution& p_x) {
  std::map<double, double> merged;
  for (std::size_t i = 0; i < p_x.size(); ++i) {
    if (p_x[i] > kZeroWeight) merged[p_x.atoms()[i]] += p_x[i];
  }
  std::vector<Cell> cells;
  cells.reserve(merged.size());
  for (const auto& [x, w] : merged) cells.push_back({x, w});
  return cells;
}

void require_atoms(const DiscreteDistribution& p_x, std::size_t levels) {
  if (!p_x.has_atoms()) {
    throw std::invalid_argument("quantizer: source has no atom locations");
  }
  if (levels < 1) throw std::invalid_argument("quantizer: levels must be >= 1");
}

// Codebook equal to the distinct atoms; used whenever levels suffice.
Quantizer lossless(const DiscreteDistribution& p_x,
                   const std::vector<Cell>& cells) {
  std::vector<double> codebook;
  for (const Cell& c : cells) codebook.push_back(c.location);
  auto assignment = nearest_codewords(p_x.atoms(), codebook);
  return make_quantizer(p_x, std::move(codebook), std::move(assignment));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<double> cell_masses(const DiscreteDistribution& p_x,
                                std::span<const std::size_t> assignment,
                                std::size_t levels) {
  std::vector<double> mass(levels, 0.0);
  for (std::size_t i = 0; i < p_x.size(); ++i) mass[assignment[i]] += p_x[i];
  return mass;
}

double assigned_distortion(const DiscreteDistribution& p_x,
                           std::span<const double> codebook,
                           std::span<const std::size_t> assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < p_x.size(); ++i) {
    const double diff = p_x.atoms()[i] - codebook[assignment[i]];
    total += p_x[i] * diff * diff;
  }
  return total;
}

// Moves the first empty codeword onto the atom contributing the most
// distortion. Returns false when no cell is empty.
bool reseed_empty(const DiscreteDistribution& p_x, std::vector<double>& codebook,
                  std::span<const std::size_t> assignment,
                  std::span<const double> mass) {
  for (std::size_t k = 0; k < codebook.size(); ++k) {
    if (mass[k] > kZeroWeight) continue;
    std::size_t worst = 0;
    double worst_contrib = -1.0;
    for (std::size_t i = 0; i < p_x.size(); ++i) {
      const double diff = p_x.atoms()[i] - codebook[assignment[i]];
      const double contrib = p_x[i] * diff * diff;
      if (contrib > worst_contrib) {
        worst_contrib = contrib;
        worst = i;
      }
    }
    codebook[k] = p_x.atoms()[worst];
    return true;
  }
  return false;
}

template <typename Run>
Quantizer best_of_restarts(const DiscreteDistribution& p_x, std::size_t levels,
                           const LloydOptions& options, Run run) {
  require_atoms(p_x, levels);
  const auto cells = distinct_cells(p_x);
  if (levels >= cells.size()) return lossless(p_x, cells);
  const int restarts = std::max(options.restarts, 1);
  Quantizer best = run(sample_codebook(p_x, levels, options.seed));
  for (int r = 1; r < restarts; ++r) {
    Quantizer q = run(sample_codebook(p_x, levels, options.seed + r));
    if (q.distortion < best.distortion) best = std::move(q);
  }
  return best;
}

Quantizer emd_alternation(const DiscreteDistribution& p_x,
                          std::vector<double> codebook,
                          const LloydOptions& options) {
  const std::size_t levels = codebook.size();
  const auto atoms = p_x.atoms();
  int it = 0;
  bool converged = false;
  while (it < options.max_iter) {
    ++it;
    auto assignment = nearest_codewords(atoms, codebook);
    const auto mass = cell_masses(p_x, assignment, levels);
    if (reseed_empty(p_x, codebook, assignment, mass)) continue;

    // Optimal weights for fixed locations are the nearest-cell masses; the
    // transport plan to them tells each codeword which mass it receives.
    const EmdResult plan =
        emd(p_x.weights(), mass, squared_error_matrix(atoms, codebook));
    if (options.on_iteration) options.on_iteration(it, plan.cost);

    double moved = 0.0;
    for (std::size_t k = 0; k < levels; ++k) {
      double received = 0.0;
      double first_moment = 0.0;
      for (std::size_t i = 0; i < p_x.size(); ++i) {
        received += plan.coupling(i, k);
        first_moment += plan.coupling(i, k) * atoms[i];
      }
      const double next = first_moment / received;
      moved = std::max(moved, std::abs(next - codebook[k]));
      codebook[k] = next;
    }
    if (moved <= options.tol) {
      converged = true;
      break;
    }
  }
  auto assignment = nearest_codewords(atoms, codebook);
  Quantizer q = make_quantizer(p_x, std::move(codebook), std::move(assignment));
  q.iterations = it;
  q.converged = converged;

  const EmdResult certificate =
      emd(p_x, q.induced_q, squared_error_matrix(atoms, q.codebook));
  if (std::abs(certificate.cost - q.distortion) > 1e-9) {
    throw std::runtime_error(
        "extremal_emd_quantizer: EMD cost disagrees with distortion");
  }
  return q;
}

}  // namespace

std::vector<std::size_t> nearest_codewords(std::span<const double> atoms,
                                           std::span<const double> codebook) {
  if (codebook.empty()) throw std::invalid_argument("empty codebook");
  std::vector<std::size_t> out(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double best = kInf;
    for (std::size_t k = 0; k < codebook.size(); ++k) {
      const double diff = atoms[i] - codebook[k];
      if (diff * diff < best) {
        best = diff * diff;
        out[i] = k;
      }
    }
  }
  return out;
}

Quantizer make_quantizer(const DiscreteDistribution& p_x,
                         std::vector<double> codebook,
                         std::vector<std::size_t> assignment) {
  if (assignment.size() != p_x.size()) {
    throw std::invalid_argument("make_quantizer: assignment length mismatch");
  }
  for (std::size_t a : assignment) {
    if (a >= codebook.size()) {
      throw std::invalid_argument("make_quantizer: assignment out of range");
    }
  }
  auto mass = cell_masses(p_x, assignment, codebook.size());
  const double distortion = assigned_distortion(p_x, codebook, assignment);
  Quantizer q{codebook, std::move(assignment), distortion,
              DiscreteDistribution::normalized(codebook, std::move(mass))};
  return q;
}

std::vector<double> sample_codebook(const DiscreteDistribution& p_x,
                                    std::size_t levels, std::uint64_t seed) {
  require_atoms(p_x, levels);
  const auto cells = distinct_cells(p_x);
  if (levels > cells.size()) {
    throw std::invalid_argument("sample_codebook: more levels than atoms");
  }
  // Greedy k-means++: each pick is the best of a few draws with probability
  // proportional to mass times squared distance to the codebook so far.
  std::mt19937_64 rng(seed);
  const std::size_t n = cells.size();
  const int draws =
      2 + static_cast<int>(std::log(static_cast<double>(levels)));
  std::vector<double> dist(n, 1.0);
  std::vector<double> codebook;
  codebook.reserve(levels);
  auto draw = [&]() {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) total += cells[k].weight * dist[k];
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = cells[k].weight * dist[k];
      if (w <= 0.0) continue;
      pick = k;
      acc += w;
      if (target < acc) break;
    }
    return pick;
  };
  while (codebook.size() < levels) {
    const int tries = codebook.empty() ? 1 : draws;
    std::size_t best = n;
    double best_potential = kInf;
    std::vector<double> best_dist;
    for (int t = 0; t < tries; ++t) {
      const std::size_t c = draw();
      std::vector<double> next(n);
      double potential = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double diff = cells[k].location - cells[c].location;
        next[k] = codebook.empty() ? diff * diff : std::min(dist[k], diff * diff);
        potential += cells[k].weight * next[k];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best = c;
        best_dist = std::move(next);
      }
    }
    codebook.push_back(cells[best].location);
    dist = std::move(best_dist);
  }
  return codebook;
}

Quantizer lloyd_max(const DiscreteDistribution& p_x,
                    std::vector<double> codebook,
                    const LloydOptions& options) {
  require_atoms(p_x, codebook.size());
  const auto cells = distinct_cells(p_x);
  if (codebook.size() >= cells.size()) return lossless(p_x, cells);

  const std::size_t levels = codebook.size();
  const auto atoms = p_x.atoms();
  int it = 0;
  bool converged = false;
  while (it < options.max_iter) {
    ++it;
    auto assignment = nearest_codewords(atoms, codebook);
    if (options.on_iteration) {
      options.on_iteration(it, assigned_distortion(p_x, codebook, assignment));
    }
    const auto mass = cell_masses(p_x, assignment, levels);
    if (reseed_empty(p_x, codebook, assignment, mass)) continue;

    std::vector<double> moment(levels, 0.0);
    for (std::size_t i = 0; i < p_x.size(); ++i) {
      moment[assignment[i]] += p_x[i] * atoms[i];
    }
    double moved = 0.0;
    for (std::size_t k = 0; k < levels; ++k) {
      const double next = moment[k] / mass[k];
      moved = std::max(moved, std::abs(next - codebook[k]));
      codebook[k] = next;
    }
    if (moved <= options.tol) {
      converged = true;
      break;
    }
  }
  auto assignment = nearest_codewords(atoms, codebook);
  Quantizer q = make_quantizer(p_x, std::move(codebook), std::move(assignment));
  q.iterations = it;
  q.converged = converged;
  return q;
}

Quantizer lloyd_max(const DiscreteDistribution& p_x, std::size_t levels,
                    const LloydOptions& options) {
  return best_of_restarts(p_x, levels, options, [&](std::vector<double> init) {
    return lloyd_max(p_x, std::move(init), options);
  });
}

Quantizer kmeans_1d_exact(const DiscreteDistribution& p_x,
                          std::size_t levels) {
  require_atoms(p_x, levels);
  const auto cells = distinct_cells(p_x);
  if (levels >= cells.size()) return lossless(p_x, cells);

  const std::size_t n = cells.size();
  // Prefix sums about a shift to limit cancellation in the segment costs.
  double shift = 0.0;
  for (const Cell& c : cells) shift += c.weight * c.location;
  std::vector<double> w(n + 1, 0.0);
  std::vector<double> s(n + 1, 0.0);
  std::vector<double> ss(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = cells[i].location - shift;
    w[i + 1] = w[i] + cells[i].weight;
    s[i + 1] = s[i] + cells[i].weight * x;
    ss[i + 1] = ss[i] + cells[i].weight * x * x;
  }
  // Cost of the segment of cells [a, b).
  auto segment = [&](std::size_t a, std::size_t b) {
    const double mass = w[b] - w[a];
    const double first = s[b] - s[a];
    return std::max(ss[b] - ss[a] - first * first / mass, 0.0);
  };

  // best[k][b]: optimal cost of the first b cells in k segments.
  std::vector<std::vector<double>> best(levels + 1,
                                        std::vector<double>(n + 1, kInf));
  std::vector<std::vector<std::size_t>> split(
      levels + 1, std::vector<std::size_t>(n + 1, 0));
  best[0][0] = 0.0;
  for (std::size_t k = 1; k <= levels; ++k) {
    for (std::size_t b = k; b <= n; ++b) {
      for (std::size_t a = k - 1; a < b; ++a) {
        const double cand = best[k - 1][a] + segment(a, b);
        if (cand < best[k][b]) {
          best[k][b] = cand;
          split[k][b] = a;
        }
      }
    }
  }

  std::vector<double> codebook(levels);
  std::size_t b = n;
  for (std::size_t k = levels; k >= 1; --k) {
    const std::size_t a = split[k][b];
    double mass = 0.0;
    double moment = 0.0;
    for (std::size_t i = a; i < b; ++i) {
      mass += cells[i].weight;
      moment += cells[i].weight * cells[i].location;
    }
    codebook[k - 1] = moment / mass;
    b = a;
  }
  auto assignment = nearest_codewords(p_x.atoms(), codebook);
  return make_quantizer(p_x, std::move(codebook), std::move(assignment));
}

Quantizer extremal_emd_quantizer(const DiscreteDistribution& p_x,
                                 std::size_t levels,
                                 const LloydOptions& options) {
  return best_of_restarts(p_x, levels, options, [&](std::vector<double> init) {
    return emd_alternation(p_x, std::move(init), options);
  });
}

}  // namespace rdot
