#include "rdot/fixtures.hpp"

#include <cmath>
#include <stdexcept>

namespace rdot::fixtures {

DiscreteDistribution five_atom_source() {
  return DiscreteDistribution({-1.0, -0.3, 0.2, 0.8, 1.5},
                              {0.15, 0.30, 0.25, 0.20, 0.10});
}

DiscreteDistribution ten_atom_source() {
  return DiscreteDistribution(
      {-2.1, -1.3, -0.9, -0.2, 0.4, 0.7, 1.5, 2.2, 3.0, 4.1},
      {0.05, 0.12, 0.08, 0.15, 0.10, 0.14, 0.09, 0.11, 0.07, 0.09});
}

DiscreteDistribution binary_uniform_source() {
  return DiscreteDistribution({0.0, 1.0}, {0.5, 0.5});
}

Matrix binary_symmetric_channel(double crossover) {
  if (!(crossover >= 0.0 && crossover <= 1.0)) {
    throw std::invalid_argument("crossover must lie in [0, 1]");
  }
  Matrix c(2, 2);
  c << 1.0 - crossover, crossover, crossover, 1.0 - crossover;
  return c;
}

Matrix identity_channel(std::size_t n) {
  return Matrix::Identity(static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(n));
}

Matrix z_channel() {
  Matrix c(2, 2);
  c << 1.0, 0.0, 0.3, 0.7;
  return c;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (n == 0 || !(lo > 0.0) || !(hi >= lo)) {
    throw std::invalid_argument("log_spaced: need n >= 1 and 0 < lo <= hi");
  }
  if (n == 1) return {lo};
  std::vector<double> v(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = std::exp(a + (b - a) * static_cast<double>(k) /
                            static_cast<double>(n - 1));
  }
  v.front() = lo;
  v.back() = hi;
  return v;
}

}  // namespace rdot::fixtures
