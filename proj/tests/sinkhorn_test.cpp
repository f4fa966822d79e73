#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rdot/exact_ot.hpp"
#include "rdot/sinkhorn.hpp"
#include "test_support.hpp"

namespace rdot {
namespace {

// Entropic objective of the symmetric 2x2 coupling [[a, h - a], [h - a, a]]
// with uniform marginals and Hamming cost.
double two_by_two_objective(double a, double eps) {
  const double h = 0.5;
  const double off = h - a;
  auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v / 0.25) : 0.0; };
  return 2.0 * off + eps * (2.0 * xlogx(a) + 2.0 * xlogx(off));
}

double golden_section(double lo, double hi, double eps) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo);
  double x2 = lo + r * (hi - lo);
  for (int k = 0; k < 200; ++k) {
    if (two_by_two_objective(x1, eps) < two_by_two_objective(x2, eps)) {
      hi = x2;
    } else {
      lo = x1;
    }
    x1 = hi - r * (hi - lo);
    x2 = lo + r * (hi - lo);
  }
  return 0.5 * (lo + hi);
}

TEST(Sinkhorn, HugeEpsGivesProductCoupling) {
  std::mt19937_64 rng(1);
  const auto mu = testing::random_distribution(rng, 4);
  const auto nu = testing::random_distribution(rng, 3);
  const auto d = testing::random_cost(rng, 4, 3);
  const auto r = sinkhorn(mu, nu, d, 1e6);
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(r.coupling(i, j), mu[i] * nu[j], 1e-6);
    }
  }
  EXPECT_LE(r.kl_term, 1e-6);
}

TEST(Sinkhorn, PointMass) {
  const DiscreteDistribution one({1.0});
  const auto r =
      sinkhorn(one, one, DistortionMatrix(Matrix::Constant(1, 1, 0.7)), 0.3);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.coupling(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(r.transport_cost, 0.7, 1e-15);
  EXPECT_NEAR(r.kl_term, 0.0, 1e-15);
}

TEST(Sinkhorn, TwoByTwoMatchesGoldenSection) {
  const auto half = DiscreteDistribution::uniform(2);
  const auto d = hamming_matrix(2, 2);
  for (double eps : {1.0, 0.3, 2.5}) {
    const double a = golden_section(0.0, 0.5, eps);
    const auto r = sinkhorn(half, half, d, eps);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.coupling(0, 0), a, 1e-6);
    EXPECT_NEAR(r.coupling(0, 1), 0.5 - a, 1e-6);
    EXPECT_NEAR(r.objective, two_by_two_objective(a, eps), 1e-6);
  }
}

TEST(Sinkhorn, InvariantsOnRandomInstances) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    const auto mu = testing::random_distribution(rng, 5);
    const auto nu = testing::random_distribution(rng, 5);
    const auto d = testing::random_cost(rng, 5, 5);
    const auto r = sinkhorn(mu, nu, d, 0.1);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.marginal_error, 1e-9);
    EXPECT_LE(r.coupling.row_violation(mu.weights()), 1e-9);
    EXPECT_LE(r.coupling.col_violation(nu.weights()), 1e-9);
    EXPECT_LE(factorization_residual(r, mu, nu, d), 1e-8);
    EXPECT_NEAR(r.objective, r.transport_cost + r.eps * r.kl_term, 1e-10);
    EXPECT_NEAR(r.kl_term, kl_to_product(r.coupling.matrix(), mu.weights(),
                                         nu.weights()),
                1e-9);
    EXPECT_GE(r.transport_cost, emd(mu, nu, d).cost - 1e-9);
  }
}

TEST(Sinkhorn, OneMoreSweepIsAFixedPoint) {
  std::mt19937_64 rng(7);
  const SinkhornOptions opts;
  for (int trial = 0; trial < 10; ++trial) {
    const auto mu = testing::random_distribution(rng, 5);
    const auto nu = testing::random_distribution(rng, 4);
    const auto d = testing::random_cost(rng, 5, 4);
    const auto r = sinkhorn(mu, nu, d, 0.2, opts);
    ASSERT_TRUE(r.converged);
    const auto again = sinkhorn(mu, nu, d, 0.2, {opts.tol, 1}, r.g);
    for (std::size_t i = 0; i < r.f.size(); ++i) {
      EXPECT_NEAR(again.f[i], r.f[i], 10 * opts.tol);
    }
    for (std::size_t j = 0; j < r.g.size(); ++j) {
      EXPECT_NEAR(again.g[j], r.g[j], 10 * opts.tol);
    }
  }
}

TEST(Sinkhorn, SwappingMarginalsTransposesCoupling) {
  std::mt19937_64 rng(9);
  const SinkhornOptions tight{1e-14, 100000};
  for (int trial = 0; trial < 5; ++trial) {
    const auto mu = testing::random_distribution(rng, 4);
    const auto nu = testing::random_distribution(rng, 3);
    const auto d = testing::random_cost(rng, 4, 3);
    const auto ab = sinkhorn(mu, nu, d, 0.5, tight);
    const auto ba = sinkhorn(nu, mu, d.transposed(), 0.5, tight);
    EXPECT_LE((ab.coupling.matrix() - ba.coupling.matrix().transpose())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Sinkhorn, EpsSweepMonotoneAndApproachesEmd) {
  std::mt19937_64 rng(77);
  const std::vector<double> eps{10.0, 1.0, 0.1, 0.01, 1e-3};
  for (int trial = 0; trial < 10; ++trial) {
    const auto mu = testing::random_distribution(rng, 5);
    const auto nu = testing::random_distribution(rng, 5);
    const auto d = testing::random_cost(rng, 5, 5);
    const auto sweep = sinkhorn_eps_sweep(mu, nu, d, eps);
    ASSERT_EQ(sweep.size(), eps.size());
    for (std::size_t k = 1; k < sweep.size(); ++k) {
      EXPECT_TRUE(sweep[k].converged);
      EXPECT_LE(sweep[k].objective, sweep[k - 1].objective + 1e-9);
      EXPECT_LE(sweep[k].transport_cost, sweep[k - 1].transport_cost + 1e-9);
    }
    EXPECT_NEAR(sweep.back().transport_cost, emd(mu, nu, d).cost, 0.01);
  }
}

TEST(Sinkhorn, SweepSingleEpsMatchesDirectCall) {
  const auto half = DiscreteDistribution::uniform(2);
  const auto d = hamming_matrix(2, 2);
  const std::vector<double> eps{1.0};
  const auto sweep = sinkhorn_eps_sweep(half, half, d, eps);
  EXPECT_EQ(sweep.front().coupling.matrix(),
            sinkhorn(half, half, d, 1.0).coupling.matrix());
}

TEST(Sinkhorn, TwoByTwoTransportCostFallsWithEps) {
  const auto half = DiscreteDistribution::uniform(2);
  const auto d = hamming_matrix(2, 2);
  const std::vector<double> eps{10.0, 1.0, 0.1};
  const auto sweep = sinkhorn_eps_sweep(half, half, d, eps);
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const double a = golden_section(0.0, 0.5, eps[k]);
    EXPECT_NEAR(sweep[k].transport_cost, 1.0 - 2.0 * a, 1e-6);
  }
  EXPECT_LT(sweep[1].transport_cost, sweep[0].transport_cost);
  EXPECT_LT(sweep[2].transport_cost, sweep[1].transport_cost);
}

TEST(Sinkhorn, NewtonPolishAgreesWithPlainSweeps) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    const auto mu = testing::random_distribution(rng, 6);
    const auto nu = testing::random_distribution(rng, 5);
    const auto d = testing::random_cost(rng, 6, 5);
    const auto plain = sinkhorn(mu, nu, d, 0.05);
    const auto newton = sinkhorn(mu, nu, d, 0.05, {1e-9, 100000, true, 3});
    ASSERT_TRUE(plain.converged);
    ASSERT_TRUE(newton.converged);
    EXPECT_LE((plain.coupling.matrix() - newton.coupling.matrix())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-8);
    EXPECT_LE(factorization_residual(newton, mu, nu, d), 1e-8);
  }
}

TEST(Sinkhorn, MaxIterReportsPartialResult) {
  std::mt19937_64 rng(4);
  const auto mu = testing::random_distribution(rng, 5);
  const auto nu = testing::random_distribution(rng, 5);
  const auto d = testing::random_cost(rng, 5, 5);
  const auto r = sinkhorn(mu, nu, d, 1e-3, {1e-14, 3});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_NEAR(r.coupling.matrix().sum(), 1.0, 1e-10);
}

TEST(Sinkhorn, ZeroWeightAtomsAndInfiniteCosts) {
  const DiscreteDistribution mu({0.5, 0.0, 0.5});
  const DiscreteDistribution nu({0.5, 0.5});
  Matrix c(3, 2);
  const double inf = std::numeric_limits<double>::infinity();
  c << 0.0, inf, 1.0, 1.0, inf, 0.0;
  const auto r = sinkhorn(mu, nu, DistortionMatrix::signed_cost(c), 0.5);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.coupling(0, 1), 0.0);
  EXPECT_EQ(r.coupling(2, 0), 0.0);
  EXPECT_EQ(r.coupling.matrix().row(1).sum(), 0.0);
  EXPECT_NEAR(r.coupling(0, 0), 0.5, 1e-9);
}

TEST(Sinkhorn, InputErrors) {
  const auto u = DiscreteDistribution::uniform(2);
  EXPECT_THROW(sinkhorn(u, u, hamming_matrix(2, 2), 0.0),
               std::invalid_argument);
  EXPECT_THROW(sinkhorn(u, u, hamming_matrix(2, 3), 1.0),
               std::invalid_argument);
}

}  // namespace
}  // namespace rdot
