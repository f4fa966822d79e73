#include "rdot/capacity_ot.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rdot/blahut_arimoto.hpp"

namespace rdot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s = std::max(s, std::abs(a[i] - b[i]));
  }
  return s;
}

// Finite-difference gradient along e_k - (1/n) 1. Probes that would leave
// the simplex fall back to a one-sided difference.
std::vector<double> tangent_gradient(
    const std::function<double(const std::vector<double>&)>& value,
    const std::vector<double>& r, double at_r, double h) {
  const std::size_t n = r.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double min_other = *std::min_element(r.begin(), r.end());
  std::vector<double> grad(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    auto probe = [&](double t) {
      std::vector<double> p = r;
      for (std::size_t i = 0; i < n; ++i) p[i] -= t * inv_n;
      p[k] += t;
      return p;
    };
    const bool can_up = min_other - h * inv_n >= 0.0;
    const bool can_down = r[k] - h * (1.0 - inv_n) >= 0.0;
    if (can_up && can_down) {
      grad[k] = (value(probe(h)) - value(probe(-h))) / (2.0 * h);
    } else if (can_up) {
      grad[k] = (value(probe(h)) - at_r) / h;
    } else if (can_down) {
      grad[k] = (at_r - value(probe(-h))) / h;
    }
  }
  return grad;
}

}  // namespace

std::vector<double> project_to_simplex(std::vector<double> v) {
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  double total = 0.0;
  for (double& x : v) {
    x = std::max(x - theta, 0.0);
    total += x;
  }
  for (double& x : v) x /= total;
  return v;
}

DiscreteDistribution output_distribution(const Matrix& channel,
                                         const DiscreteDistribution& r) {
  validate_channel(channel);
  if (r.size() != static_cast<std::size_t>(channel.rows())) {
    throw std::invalid_argument("input distribution length != channel rows");
  }
  std::vector<double> out(static_cast<std::size_t>(channel.cols()), 0.0);
  for (Eigen::Index j = 0; j < channel.cols(); ++j) {
    for (Eigen::Index i = 0; i < channel.rows(); ++i) {
      out[j] += r[i] * channel(i, j);
    }
  }
  return DiscreteDistribution::normalized(std::move(out));
}

CapacityCost capacity_cost_matrix(const Matrix& channel,
                                  const DiscreteDistribution& r) {
  const DiscreteDistribution full = output_distribution(channel, r);
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
  for (std::size_t j = 0; j < full.size(); ++j) {
    (full[j] > kZeroWeight ? kept : dropped).push_back(j);
  }
  Matrix cost(channel.rows(), static_cast<Eigen::Index>(kept.size()));
  std::vector<double> out(kept.size());
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const std::size_t j = kept[c];
    out[c] = full[j];
    for (Eigen::Index i = 0; i < channel.rows(); ++i) {
      const double p = channel(i, static_cast<Eigen::Index>(j));
      cost(i, static_cast<Eigen::Index>(c)) =
          p > 0.0 ? -std::log(p / full[j]) : kInf;
    }
  }
  return CapacityCost{DistortionMatrix::signed_cost(std::move(cost)),
                      std::move(kept), std::move(dropped),
                      DiscreteDistribution::normalized(std::move(out))};
}

CapacityValue capacity_sinkhorn_value(const Matrix& channel,
                                      const DiscreteDistribution& r,
                                      const SinkhornOptions& inner) {
  const CapacityCost c = capacity_cost_matrix(channel, r);
  const SinkhornResult s = sinkhorn(r, c.output, c.cost, 0.5, inner);
  return CapacityValue{2.0 * s.objective, s.converged};
}

CapacityOtResult capacity_via_ot(const Matrix& channel,
                                 const CapacityOtOptions& options) {
  validate_channel(channel);
  const auto n = static_cast<std::size_t>(channel.rows());
  bool inner_ok = true;
  auto value = [&](const std::vector<double>& r) {
    const CapacityValue v = capacity_sinkhorn_value(
        channel, DiscreteDistribution::normalized(r), options.inner);
    inner_ok = inner_ok && v.converged;
    return v.value_nats;
  };

  std::vector<double> r(n, 1.0 / static_cast<double>(n));
  double current = value(r);
  double step = 1.0;
  double grad_norm = kInf;
  int it = 0;
  bool converged = false;
  while (it < options.outer_max_iter) {
    const auto grad = tangent_gradient(value, r, current, options.fd_step);
    // Projected-gradient mapping at unit step measures stationarity.
    std::vector<double> unit(n);
    for (std::size_t i = 0; i < n; ++i) unit[i] = r[i] + grad[i];
    grad_norm = sup_distance(project_to_simplex(unit), r);
    if (grad_norm <= options.outer_tol) {
      converged = true;
      break;
    }
    step = std::min(2.0 * step, 1e6);
    bool accepted = false;
    while (step > 1e-14) {
      std::vector<double> trial(n);
      for (std::size_t i = 0; i < n; ++i) trial[i] = r[i] + step * grad[i];
      trial = project_to_simplex(std::move(trial));
      std::vector<double> delta(n);
      for (std::size_t i = 0; i < n; ++i) delta[i] = trial[i] - r[i];
      const double v = value(trial);
      if (v >= current + kArmijo * dot(grad, delta)) {
        r = std::move(trial);
        current = v;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++it;
    if (!accepted) {
      converged = true;  // no ascent left at finite-difference resolution
      break;
    }
  }

  const auto input = DiscreteDistribution::normalized(r);
  const CapacityResult ba = ba_capacity(channel);
  CapacityOtResult out{current, input, output_distribution(channel, input)};
  out.ba_reference = ba.capacity_nats;
  out.discrepancy = current - ba.capacity_nats;
  out.iterations = it;
  out.gradient_norm = grad_norm;
  out.converged = converged && inner_ok;
  return out;
}

}  // namespace rdot
