#include "rdot/sinkhorn_rd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "laplacian.hpp"

namespace rdot {

namespace {

constexpr double kClamp = 1e-12;
constexpr double kPrune = 1e-10;
constexpr double kWarmStartFloor = 1e-6;
constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-14;
constexpr double kMaxStep = 1e8;
// Lambda ladder for cold starts: first rung in units of 1 / max distortion,
// then geometric.
constexpr double kContinuationStart = 10.0;
constexpr double kContinuationRatio = 1.25;

struct Iterate {
  std::vector<double> q;
  SinkhornResult inner;
  double lagrangian;
};

std::vector<double> clamp_and_normalize(std::vector<double> q) {
  double total = 0.0;
  for (double& w : q) {
    w = std::max(w, kClamp);
    total += w;
  }
  for (double& w : q) w /= total;
  return q;
}

// lambda * S from the dual value <f, P> + <g, q>, which is second-order
// accurate in the residual marginal error.
Iterate evaluate(const DiscreteDistribution& p_x, const DistortionMatrix& d,
                 double lambda, const SinkhornOptions& inner,
                 std::vector<double> q, std::span<const double> warm_g) {
  const auto nu = DiscreteDistribution::normalized(q);
  SinkhornResult r = warm_g.empty()
                         ? sinkhorn(p_x, nu, d, 1.0 / lambda, inner)
                         : sinkhorn(p_x, nu, d, 1.0 / lambda, inner, warm_g);
  double dual = 0.0;
  for (std::size_t i = 0; i < p_x.size(); ++i) {
    if (p_x[i] > kZeroWeight) dual += p_x[i] * r.f[i];
  }
  for (std::size_t j = 0; j < nu.size(); ++j) dual += nu[j] * r.g[j];
  return Iterate{std::vector<double>(nu.weights().begin(), nu.weights().end()),
                 std::move(r), lambda * dual};
}

std::vector<double> gradient(const Iterate& it, double lambda) {
  std::vector<double> grad(it.inner.g.size());
  for (std::size_t j = 0; j < grad.size(); ++j) grad[j] = lambda * it.inner.g[j];
  return grad;
}

double weighted_mean(std::span<const double> q, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) s += q[j] * v[j];
  return s;
}

// KKT residual on the simplex: free weights need a gradient equal to the
// mean, weights at the floor only need it to be no smaller.
double projected_gradient_norm(std::span<const double> q,
                               std::span<const double> grad) {
  const double c = weighted_mean(q, grad);
  double worst = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double dev = grad[j] - c;
    worst = std::max(worst, q[j] > kPrune ? std::abs(dev) : std::max(-dev, 0.0));
  }
  return worst;
}

std::vector<double> apply_log_step(std::span<const double> q,
                                   std::span<const double> s) {
  std::vector<double> logs(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) logs[j] = std::log(q[j]) + s[j];
  const double hi = *std::max_element(logs.begin(), logs.end());
  std::vector<double> next(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) next[j] = std::exp(logs[j] - hi);
  double total = 0.0;
  for (double w : next) total += w;
  for (double& w : next) w /= total;
  return clamp_and_normalize(std::move(next));
}

// Hessian of the Lagrangian in log-weight coordinates, valid on the tangent
// space sum_j q_j s_j = 0. Implicit differentiation of the Sinkhorn fixed
// point gives G = R^T L^+ R, where L is the graph Laplacian of
// w_ik = sum_j pi_ij pi_kj / q_j and R = pi - P q^T.
Matrix log_weight_curvature(const Matrix& pi, const DiscreteDistribution& p_x,
                            std::span<const double> q) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < p_x.size(); ++i) {
    if (p_x[i] > kZeroWeight) rows.push_back(static_cast<Eigen::Index>(i));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(q.size());
  Matrix r(n, m);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index j = 0; j < m; ++j) {
      r(a, j) = pi(rows[a], j) - p_x[rows[a]] * q[j];
    }
  }
  Matrix lap = Matrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      double w = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        w += pi(rows[a], j) * pi(rows[b], j) / q[j];
      }
      lap(a, b) = lap(b, a) = -w;
      lap(a, a) += w;
      lap(b, b) += w;
    }
  }
  Matrix x(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    x.col(j) = detail::solve_laplacian(lap, r.col(j));
  }
  return r.transpose() * x;
}

// Minimizes <q * grad, s> + s^T G s / 2 + s^T diag(q) s / (2 step) subject
// to sum_j q_j s_j = 0. Without curvature this is the exponentiated-gradient
// direction -step * (grad - mean).
std::vector<double> log_direction(std::span<const double> q,
                                  std::span<const double> grad, double step,
                                  const Matrix* curvature) {
  const std::size_t m = q.size();
  const double c = weighted_mean(q, grad);
  std::vector<double> s(m);
  if (curvature == nullptr) {
    for (std::size_t j = 0; j < m; ++j) s[j] = -step * (grad[j] - c);
    return s;
  }
  Matrix lhs = *curvature;
  Eigen::VectorXd rhs(m);
  Eigen::VectorXd qv(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    lhs(k, k) += q[j] / step + std::max(q[j] * (grad[j] - c), 0.0);
    rhs(k) = -q[j] * (grad[j] - c);
    qv(k) = q[j];
  }
  const auto ldlt = lhs.ldlt();
  const Eigen::VectorXd s1 = ldlt.solve(rhs);
  const Eigen::VectorXd s2 = ldlt.solve(qv);
  const double mu = qv.dot(s1) / qv.dot(s2);
  const Eigen::VectorXd sol = s1 - mu * s2;
  for (std::size_t j = 0; j < m; ++j) {
    s[j] = sol(static_cast<Eigen::Index>(j));
    if (!std::isfinite(s[j])) return log_direction(q, grad, step, nullptr);
  }
  return s;
}

SinkhornRdResult solve(const DiscreteDistribution& p_x,
                       const DistortionMatrix& d, double lambda,
                       const SinkhornRdOptions& options,
                       std::vector<double> q0, std::span<const double> g0) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("sinkhorn_rd: lambda must be positive");
  }
  if (static_cast<std::size_t>(d.rows()) != p_x.size()) {
    throw std::invalid_argument("sinkhorn_rd: distortion rows != source size");
  }
  if (q0.size() != static_cast<std::size_t>(d.cols())) {
    throw std::invalid_argument("sinkhorn_rd: grid size mismatch");
  }

  Iterate cur = evaluate(p_x, d, lambda, options.inner,
                         clamp_and_normalize(std::move(q0)), g0);
  OuterStop stop = OuterStop::kMaxIterations;
  double step = 1.0;
  int it = 0;
  std::vector<double> grad = gradient(cur, lambda);
  double grad_norm = projected_gradient_norm(cur.q, grad);

  while (true) {
    if (!cur.inner.converged) {
      stop = OuterStop::kInnerFailure;
      break;
    }
    if (grad_norm <= options.outer_tol) {
      stop = OuterStop::kGradient;
      break;
    }
    if (it >= options.outer_max_iter) break;

    step = std::min(2.0 * step, kMaxStep);
    std::optional<Matrix> curvature;
    if (options.curvature) {
      curvature = log_weight_curvature(cur.inner.coupling.matrix(), p_x, cur.q);
    }
    std::optional<Iterate> next;
    while (step >= kMinStep) {
      const std::vector<double> s =
          log_direction(cur.q, grad, step, curvature ? &*curvature : nullptr);
      std::vector<double> q_try = apply_log_step(cur.q, s);
      double predicted = 0.0;
      for (std::size_t j = 0; j < q_try.size(); ++j) {
        predicted += grad[j] * (q_try[j] - cur.q[j]);
      }
      // First-order prediction of the new column potential.
      std::vector<double> warm = cur.inner.g;
      if (curvature) {
        const Eigen::VectorXd gs =
            *curvature * Eigen::Map<const Eigen::VectorXd>(
                             s.data(), static_cast<Eigen::Index>(s.size()));
        for (std::size_t j = 0; j < warm.size(); ++j) {
          const double shift =
              gs(static_cast<Eigen::Index>(j)) / (lambda * cur.q[j]);
          if (std::isfinite(shift)) warm[j] += shift;
        }
      }
      Iterate cand =
          evaluate(p_x, d, lambda, options.inner, std::move(q_try), warm);
      if (cand.inner.converged &&
          cand.lagrangian <= cur.lagrangian + kArmijo * predicted) {
        next = std::move(cand);
        break;
      }
      step *= 0.5;
    }
    if (!next) {
      stop = OuterStop::kLineSearchStall;
      break;
    }
    ++it;
    const double change = std::abs(cur.lagrangian - next->lagrangian);
    const double scale = std::abs(cur.lagrangian);
    cur = std::move(*next);
    grad = gradient(cur, lambda);
    grad_norm = projected_gradient_norm(cur.q, grad);
    if (options.on_iteration) options.on_iteration(it, cur.lagrangian);
    if (grad_norm > options.outer_tol &&
        change <= options.relative_change_tol * scale) {
      stop = OuterStop::kObjectiveChange;
      break;
    }
  }

  // Report honest support: drop clamped letters and re-solve on the rest.
  std::vector<double> pruned = cur.q;
  for (double& w : pruned) {
    if (w < kPrune) w = 0.0;
  }
  const auto q_final = DiscreteDistribution::normalized(std::move(pruned));
  SinkhornResult inner =
      sinkhorn(p_x, q_final, d, 1.0 / lambda, options.inner, cur.inner.g);

  SinkhornRdResult out{RDPoint{}, q_final, std::move(inner)};
  out.outer_iterations = it;
  out.outer_gradient_norm = grad_norm;
  out.stop = stop;
  out.converged = out.inner.converged && (stop == OuterStop::kGradient ||
                                          stop == OuterStop::kObjectiveChange ||
                                          stop == OuterStop::kLineSearchStall);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t j = 0; j < q_final.size(); ++j) {
    if (q_final[j] <= 0.0) continue;
    lo = std::min(lo, lambda * out.inner.g[j]);
    hi = std::max(hi, lambda * out.inner.g[j]);
  }
  out.potential_spread = hi - lo;
  out.point.lambda = lambda;
  out.point.rate_nats = out.inner.kl_term;
  out.point.distortion = out.inner.transport_cost;
  out.point.converged = out.converged;
  return out;
}

}  // namespace

const char* to_string(OuterStop s) {
  switch (s) {
    case OuterStop::kGradient:
      return "gradient";
    case OuterStop::kObjectiveChange:
      return "objective_change";
    case OuterStop::kLineSearchStall:
      return "line_search_stall";
    case OuterStop::kMaxIterations:
      return "max_iterations";
    case OuterStop::kInnerFailure:
      return "inner_failure";
  }
  return "unknown";
}

SinkhornRdResult sinkhorn_rd_point(const DiscreteDistribution& p_x,
                                   const DistortionMatrix& d, double lambda,
                                   const SinkhornRdOptions& options) {
  const auto m = static_cast<std::size_t>(d.cols());
  std::vector<double> q(m, 1.0 / static_cast<double>(m));
  std::vector<double> g;
  // Large lambda from a uniform start leaves the potentials ill-determined
  // along exponentially weak links; climb a geometric ladder instead.
  const double top = d.matrix().size() > 0 ? d.matrix().maxCoeff() : 0.0;
  if (std::isfinite(top) && top > 0.0) {
    SinkhornRdOptions quiet = options;
    quiet.on_iteration = nullptr;
    int climbed = 0;
    for (double rung = kContinuationStart / top;
         rung < lambda / kContinuationRatio; rung *= kContinuationRatio) {
      const SinkhornRdResult r = solve(p_x, d, rung, quiet, q, g);
      climbed += r.outer_iterations;
      q.assign(r.q_y.weights().begin(), r.q_y.weights().end());
      for (double& w : q) w = std::max(w, kWarmStartFloor);
      g = r.inner.g;
    }
    if (climbed > 0 || !g.empty()) {
      SinkhornRdResult out = solve(p_x, d, lambda, options, q, g);
      out.outer_iterations += climbed;
      return out;
    }
  }
  return solve(p_x, d, lambda, options, q, {});
}

SinkhornRdResult sinkhorn_rd_point(const DiscreteDistribution& p_x,
                                   const DistortionMatrix& d, double lambda,
                                   const SinkhornRdOptions& options,
                                   const DiscreteDistribution& initial_q,
                                   std::span<const double> initial_g) {
  return solve(
      p_x, d, lambda, options,
      std::vector<double>(initial_q.weights().begin(), initial_q.weights().end()),
      initial_g);
}

RDCurve rd_sweep_sinkhorn(const DiscreteDistribution& p_x,
                          const DistortionMatrix& d,
                          std::span<const double> lambdas,
                          const SinkhornRdOptions& options) {
  if (lambdas.empty()) {
    throw std::invalid_argument("rd_sweep_sinkhorn: no lambdas");
  }
  std::vector<RDPoint> points;
  std::vector<double> warm_q;
  std::vector<double> warm_g;
  for (double lambda : lambdas) {
    const SinkhornRdResult r =
        warm_q.empty()
            ? sinkhorn_rd_point(p_x, d, lambda, options)
            : sinkhorn_rd_point(p_x, d, lambda, options,
                                DiscreteDistribution::normalized(warm_q),
                                warm_g);
    points.push_back(r.point);
    warm_q.assign(r.q_y.weights().begin(), r.q_y.weights().end());
    for (double& w : warm_q) w = std::max(w, kWarmStartFloor);
    warm_g = r.inner.g;
  }
  return RDCurve(std::move(points));
}

CouplingConditionReport coupling_condition_check(
    const DiscreteDistribution& p_x, const DiscreteDistribution& q_y,
    const DistortionMatrix& d, double lambda, double support_floor) {
  if (static_cast<std::size_t>(d.rows()) != p_x.size() ||
      static_cast<std::size_t>(d.cols()) != q_y.size()) {
    throw std::invalid_argument("coupling_condition_check: shape mismatch");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const auto n = p_x.size();
  const auto m = q_y.size();
  std::vector<double> log_z(n);
  std::vector<double> terms(std::max(n, m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      terms[j] = q_y[j] > kZeroWeight ? std::log(q_y[j]) - lambda * d(i, j)
                                      : kNegInf;
    }
    log_z[i] = log_sum_exp(std::span(terms.data(), m));
  }

  CouplingConditionReport report;
  report.residuals.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      terms[i] = p_x[i] > kZeroWeight
                     ? std::log(p_x[i]) - lambda * d(i, j) - log_z[i]
                     : kNegInf;
    }
    const double r = std::expm1(log_sum_exp(std::span(terms.data(), n)));
    report.residuals[j] = r;
    // Off the support only a letter that would grow violates optimality.
    const double violation = q_y[j] > support_floor ? std::abs(r)
                                                    : std::max(r, 0.0);
    report.max_abs_residual = std::max(report.max_abs_residual, violation);
  }
  return report;
}

}  // namespace rdot
