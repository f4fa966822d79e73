#include "rdot/exact_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rdot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Residual capacities at or below this are treated as saturated.
constexpr double kPivot = 1e-12;

struct Reduced {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
};

Reduced retained(std::span<const double> a, std::span<const double> b) {
  Reduced r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > kZeroWeight) r.rows.push_back(i);
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] > kZeroWeight) r.cols.push_back(j);
  }
  return r;
}

// Successive shortest paths on the bipartite network
//   s -> row i (cap a_i) -> col j (cap inf, cost c_ij) -> t (cap b_j).
// Node numbering: rows [0, n), cols [n, n + m), source n + m, sink n + m + 1.
class TransportSolver {
 public:
  TransportSolver(std::vector<double> a, std::vector<double> b, Matrix c)
      : n_(a.size()),
        m_(b.size()),
        supply_(std::move(a)),
        demand_(std::move(b)),
        cost_(std::move(c)),
        flow_(Matrix::Zero(n_, m_)),
        potential_(n_ + m_ + 2, 0.0) {
    double lowest = kInf;
    for (std::size_t j = 0; j < m_; ++j) {
      potential_[n_ + j] = cost_.col(j).minCoeff();
      lowest = std::min(lowest, potential_[n_ + j]);
    }
    potential_[sink()] = lowest;
  }

  void solve() {
    while (remaining_supply() > kPivot) {
      if (!augment()) break;
    }
  }

  const Matrix& flow() const { return flow_; }
  double row_potential(std::size_t i) const { return -potential_[i]; }
  double col_potential(std::size_t j) const { return potential_[n_ + j]; }

 private:
  std::size_t source() const { return n_ + m_; }
  std::size_t sink() const { return n_ + m_ + 1; }

  double remaining_supply() const {
    double r = 0.0;
    for (double s : supply_) r += s;
    return r;
  }

  bool augment() {
    const std::size_t nodes = n_ + m_ + 2;
    std::vector<double> dist(nodes, kInf);
    std::vector<std::size_t> parent(nodes, nodes);
    std::vector<bool> done(nodes, false);

    auto relax = [&](std::size_t from, std::size_t to, double cost) {
      const double reduced = cost + potential_[from] - potential_[to];
      const double cand = dist[from] + std::max(reduced, 0.0);
      if (cand < dist[to]) {
        dist[to] = cand;
        parent[to] = from;
      }
    };

    dist[source()] = 0.0;
    while (true) {
      std::size_t u = nodes;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < kInf && (u == nodes || dist[v] < dist[u])) {
          u = v;
        }
      }
      if (u == nodes || u == sink()) break;
      done[u] = true;
      if (u == source()) {
        for (std::size_t i = 0; i < n_; ++i) {
          if (supply_[i] > kPivot) relax(u, i, 0.0);
        }
      } else if (u < n_) {
        for (std::size_t j = 0; j < m_; ++j) relax(u, n_ + j, cost_(u, j));
      } else {
        const std::size_t j = u - n_;
        for (std::size_t i = 0; i < n_; ++i) {
          if (flow_(i, j) > kPivot) relax(u, i, -cost_(i, j));
        }
        if (demand_[j] > kPivot) relax(u, sink(), 0.0);
      }
    }
    if (!(dist[sink()] < kInf)) return false;

    const double cap = dist[sink()];
    for (std::size_t v = 0; v < nodes; ++v) {
      potential_[v] += std::min(dist[v], cap);
    }

    // Bottleneck along the path t <- col <- row <- ... <- row <- s.
    double delta = demand_[parent[sink()] - n_];
    std::size_t v = parent[sink()];
    while (parent[v] != source()) {
      const std::size_t u = parent[v];
      if (u >= n_) delta = std::min(delta, flow_(v, u - n_));
      v = u;
    }
    delta = std::min(delta, supply_[v]);

    demand_[parent[sink()] - n_] -= delta;
    v = parent[sink()];
    while (parent[v] != source()) {
      const std::size_t u = parent[v];
      if (u < n_) {
        flow_(u, v - n_) += delta;
      } else {
        flow_(v, u - n_) -= delta;
      }
      v = u;
    }
    supply_[v] -= delta;
    return true;
  }

  std::size_t n_;
  std::size_t m_;
  std::vector<double> supply_;
  std::vector<double> demand_;
  Matrix cost_;
  Matrix flow_;
  std::vector<double> potential_;
};

}  // namespace

double dual_infeasibility(const EmdResult& r, const DistortionMatrix& d) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      worst = std::max(worst, r.dual_row[i] + r.dual_col[j] - d(i, j));
    }
  }
  return worst;
}

double slackness_violation(const EmdResult& r, const DistortionMatrix& d,
                           double mass_threshold) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      if (r.coupling(i, j) > mass_threshold) {
        worst = std::max(
            worst, std::abs(r.dual_row[i] + r.dual_col[j] - d(i, j)));
      }
    }
  }
  return worst;
}

EmdResult emd(std::span<const double> supply, std::span<const double> demand,
              const DistortionMatrix& d) {
  if (supply.size() != static_cast<std::size_t>(d.rows()) ||
      demand.size() != static_cast<std::size_t>(d.cols())) {
    throw std::invalid_argument("emd: marginal lengths do not match costs");
  }
  if (!d.all_finite()) {
    throw std::invalid_argument("emd: cost matrix has an infinite entry");
  }
  double total_a = 0.0;
  double total_b = 0.0;
  for (double a : supply) {
    if (!(a >= 0.0)) throw std::invalid_argument("emd: negative supply");
    total_a += a;
  }
  for (double b : demand) {
    if (!(b >= 0.0)) throw std::invalid_argument("emd: negative demand");
    total_b += b;
  }
  if (std::abs(total_a - total_b) > 1e-10) {
    throw std::invalid_argument("emd: marginal masses differ");
  }
  if (!(total_a > 0.0)) throw std::invalid_argument("emd: zero mass");

  const Reduced keep = retained(supply, demand);
  std::vector<double> a(keep.rows.size());
  std::vector<double> b(keep.cols.size());
  Matrix c(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = supply[keep.rows[i]];
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = demand[keep.cols[j]];
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      c(i, j) = d(keep.rows[i], keep.cols[j]);
    }
  }

  TransportSolver solver(std::move(a), std::move(b), std::move(c));
  solver.solve();

  EmdResult out;
  out.coupling = Matrix::Zero(d.rows(), d.cols());
  out.dual_row.assign(supply.size(), kInf);
  out.dual_col.assign(demand.size(), kInf);
  for (std::size_t j = 0; j < keep.cols.size(); ++j) {
    out.dual_col[keep.cols[j]] = solver.col_potential(j);
    for (std::size_t i = 0; i < keep.rows.size(); ++i) {
      out.coupling(keep.rows[i], keep.cols[j]) = solver.flow()(i, j);
    }
  }
  for (std::size_t i = 0; i < keep.rows.size(); ++i) {
    out.dual_row[keep.rows[i]] = solver.row_potential(i);
  }
  // Dropped columns first (against retained rows), then dropped rows
  // against every column, so all pairs stay dual feasible.
  for (std::size_t j = 0; j < demand.size(); ++j) {
    if (out.dual_col[j] < kInf) continue;
    double v = kInf;
    for (std::size_t i : keep.rows) v = std::min(v, d(i, j) - out.dual_row[i]);
    out.dual_col[j] = v;
  }
  for (std::size_t i = 0; i < supply.size(); ++i) {
    if (out.dual_row[i] < kInf) continue;
    double v = kInf;
    for (std::size_t j = 0; j < demand.size(); ++j) {
      v = std::min(v, d(i, j) - out.dual_col[j]);
    }
    out.dual_row[i] = v;
  }

  out.cost = (out.coupling.array() * d.matrix().array()).sum();
  return out;
}

EmdResult emd(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
              const DistortionMatrix& d) {
  return emd(mu.weights(), nu.weights(), d);
}

}  // namespace rdot
