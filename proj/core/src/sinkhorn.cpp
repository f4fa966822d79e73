#include "rdot/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "laplacian.hpp"

namespace rdot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaxLogShift = 5.0;

std::vector<double> log_weights(const DiscreteDistribution& p) {
  std::vector<double> lw(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    lw[i] = p[i] > kZeroWeight ? std::log(p[i]) : kNegInf;
  }
  return lw;
}

class LogSinkhorn {
 public:
  LogSinkhorn(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
              const DistortionMatrix& d, double eps)
      : n_(mu.size()),
        m_(nu.size()),
        eps_(eps),
        log_mu_(log_weights(mu)),
        log_nu_(log_weights(nu)),
        scaled_(d.matrix() / eps),
        f_(n_, 0.0),
        g_(m_, 0.0),
        scratch_(std::max(n_, m_)) {}

  void set_g(std::span<const double> g) {
    if (g.size() != m_) {
      throw std::invalid_argument("sinkhorn: warm-start length mismatch");
    }
    for (std::size_t j = 0; j < m_; ++j) g_[j] = std::isfinite(g[j]) ? g[j] : 0.0;
  }

  // f_i = -eps * log sum_j nu_j exp((g_j - d_ij) / eps)
  void update_f() {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) {
        scratch_[j] = log_nu_[j] + g_[j] / eps_ - scaled_(i, j);
      }
      const double lse = log_sum_exp(std::span(scratch_.data(), m_));
      if (!std::isfinite(lse)) {
        if (log_mu_[i] == kNegInf) {
          f_[i] = 0.0;
          continue;
        }
        throw std::invalid_argument("sinkhorn: row has no finite-cost entry");
      }
      f_[i] = -eps_ * lse;
    }
  }

  void update_g() {
    for (std::size_t j = 0; j < m_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) {
        scratch_[i] = log_mu_[i] + f_[i] / eps_ - scaled_(i, j);
      }
      const double lse = log_sum_exp(std::span(scratch_.data(), n_));
      if (!std::isfinite(lse)) {
        if (log_nu_[j] == kNegInf) {
          g_[j] = 0.0;
          continue;
        }
        throw std::invalid_argument(
            "sinkhorn: column has no finite-cost entry");
      }
      g_[j] = -eps_ * lse;
    }
  }

  double log_plan(std::size_t i, std::size_t j) const {
    const double v = log_mu_[i] + log_nu_[j] + (f_[i] + g_[j]) / eps_ -
                     scaled_(i, j);
    return std::isnan(v) ? kNegInf : v;
  }

  Matrix plan() const {
    Matrix p(n_, m_);
    for (std::size_t j = 0; j < m_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) p(i, j) = std::exp(log_plan(i, j));
    }
    return p;
  }

  double col_error(const Matrix& p) const {
    double err = 0.0;
    for (std::size_t j = 0; j < m_; ++j) {
      err += std::abs(p.col(j).sum() - std::exp(log_nu_[j]));
    }
    return err;
  }

  double row_error(const Matrix& p) const {
    double err = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      err += std::abs(p.row(i).sum() - std::exp(log_mu_[i]));
    }
    return err;
  }

  // Σ π (log π - log μ - log ν), read off the potentials directly.
  double kl(const Matrix& p) const {
    double total = 0.0;
    for (std::size_t j = 0; j < m_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) {
        if (p(i, j) > 0.0) {
          total += p(i, j) * ((f_[i] + g_[j]) / eps_ - scaled_(i, j));
        }
      }
    }
    return std::max(total, 0.0);
  }

  // Newton step on the dual in units of eps over the supported atoms, with
  // the row block eliminated onto the graph Laplacian of
  // w_ik = sum_j pi_ij pi_kj / c_j. Damped until the summed L1 marginal
  // error decreases.
  void newton_step() {
    const Matrix p = plan();
    const double before = row_error(p) + col_error(p);
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < n_; ++i) {
      if (log_mu_[i] != kNegInf) rows.push_back(i);
    }
    for (std::size_t j = 0; j < m_; ++j) {
      if (log_nu_[j] != kNegInf) cols.push_back(j);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd c(m_);
    Eigen::VectorXd col_res(m_);
    for (std::size_t j : cols) {
      c(j) = p.col(j).sum();
      col_res(j) = std::exp(log_nu_[j]) - c(j);
      if (!(c(j) > 0.0)) return;
    }
    Matrix lap = Matrix::Zero(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const std::size_t i = rows[a];
      rhs(a) = std::exp(log_mu_[i]) - p.row(i).sum();
      for (std::size_t j : cols) rhs(a) -= p(i, j) * col_res(j) / c(j);
      for (Eigen::Index b = a + 1; b < n; ++b) {
        double w = 0.0;
        for (std::size_t j : cols) w += p(i, j) * p(rows[b], j) / c(j);
        lap(a, b) = lap(b, a) = -w;
        lap(a, a) += w;
        lap(b, b) += w;
      }
    }
    const Eigen::VectorXd da = detail::solve_laplacian(lap, rhs);
    if (!da.allFinite()) return;
    Eigen::VectorXd db = Eigen::VectorXd::Zero(m_);
    for (std::size_t j : cols) {
      double flow = 0.0;
      for (Eigen::Index a = 0; a < n; ++a) flow += p(rows[a], j) * da(a);
      db(j) = (col_res(j) - flow) / c(j);
    }
    if (!db.allFinite()) return;

    const std::vector<double> f0 = f_;
    const std::vector<double> g0 = g_;
    // exp is only locally linear: cap the move at kMaxLogShift per entry.
    const double largest =
        std::max(da.cwiseAbs().maxCoeff(), db.cwiseAbs().maxCoeff());
    double t = std::min(1.0, kMaxLogShift / largest);
    for (int halvings = 0; halvings < 20; ++halvings, t *= 0.5) {
      for (Eigen::Index a = 0; a < n; ++a) {
        f_[rows[a]] = f0[rows[a]] + t * eps_ * da(a);
      }
      for (std::size_t j : cols) g_[j] = g0[j] + t * eps_ * db(j);
      const Matrix trial = plan();
      if (row_error(trial) + col_error(trial) < before) return;
    }
    f_ = f0;
    g_ = g0;
  }

  const std::vector<double>& f() const { return f_; }
  const std::vector<double>& g() const { return g_; }

 private:
  std::size_t n_;
  std::size_t m_;
  double eps_;
  std::vector<double> log_mu_;
  std::vector<double> log_nu_;
  Matrix scaled_;
  std::vector<double> f_;
  std::vector<double> g_;
  std::vector<double> scratch_;
};

SinkhornResult run(const DiscreteDistribution& mu,
                   const DiscreteDistribution& nu, const DistortionMatrix& d,
                   double eps, const SinkhornOptions& options,
                   std::span<const double> initial_g) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("sinkhorn: eps must be positive");
  }
  if (static_cast<std::size_t>(d.rows()) != mu.size() ||
      static_cast<std::size_t>(d.cols()) != nu.size()) {
    throw std::invalid_argument("sinkhorn: shape mismatch");
  }
  LogSinkhorn solver(mu, nu, d, eps);
  if (!initial_g.empty()) solver.set_g(initial_g);

  int it = 0;
  bool converged = false;
  Matrix p;
  while (it < options.max_iter) {
    if (options.newton && it >= options.newton_after) solver.newton_step();
    solver.update_f();
    ++it;
    p = solver.plan();
    const double col_err = solver.col_error(p);
    solver.update_g();
    if (col_err <= options.tol) {
      p = solver.plan();
      if (solver.row_error(p) <= options.tol) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) p = solver.plan();

  // Guard the Coupling invariant against drift on unconverged partial plans.
  const double mass = p.sum();
  Matrix entries = std::abs(mass - 1.0) > 1e-10 ? Matrix(p / mass) : p;

  SinkhornResult r{Coupling(std::move(entries))};
  r.f = solver.f();
  r.g = solver.g();
  r.eps = eps;
  r.iterations = it;
  r.converged = converged;
  r.marginal_error = std::max(solver.row_error(p), solver.col_error(p));
  double cost = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      if (p(i, j) > 0.0) cost += p(i, j) * d(i, j);
    }
  }
  r.transport_cost = cost;
  r.kl_term = solver.kl(p);
  r.objective = r.transport_cost + eps * r.kl_term;
  return r;
}

}  // namespace

SinkhornResult sinkhorn(const DiscreteDistribution& mu,
                        const DiscreteDistribution& nu,
                        const DistortionMatrix& d, double eps,
                        const SinkhornOptions& options) {
  return run(mu, nu, d, eps, options, {});
}

SinkhornResult sinkhorn(const DiscreteDistribution& mu,
                        const DiscreteDistribution& nu,
                        const DistortionMatrix& d, double eps,
                        const SinkhornOptions& options,
                        std::span<const double> initial_g) {
  return run(mu, nu, d, eps, options, initial_g);
}

std::vector<SinkhornResult> sinkhorn_eps_sweep(
    const DiscreteDistribution& mu, const DiscreteDistribution& nu,
    const DistortionMatrix& d, std::span<const double> eps_list,
    const SinkhornOptions& options) {
  std::vector<SinkhornResult> out;
  out.reserve(eps_list.size());
  for (double eps : eps_list) {
    if (out.empty()) {
      out.push_back(sinkhorn(mu, nu, d, eps, options));
    } else {
      const std::vector<double> g = out.back().g;
      out.push_back(sinkhorn(mu, nu, d, eps, options, g));
    }
  }
  return out;
}

double factorization_residual(const SinkhornResult& r,
                              const DiscreteDistribution& mu,
                              const DiscreteDistribution& nu,
                              const DistortionMatrix& d, double floor) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      const double actual = r.coupling(i, j);
      if (actual <= floor) continue;
      const double model =
          mu[i] * nu[j] * std::exp((r.f[i] + r.g[j] - d(i, j)) / r.eps);
      worst = std::max(worst, std::abs(actual - model) / actual);
    }
  }
  return worst;
}

}  // namespace rdot
