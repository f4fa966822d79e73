#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rdot/blahut_arimoto.hpp"
#include "rdot/fixtures.hpp"
#include "rdot/sinkhorn_rd.hpp"
#include "test_support.hpp"

namespace rdot {
namespace {

struct Problem {
  DiscreteDistribution p;
  DistortionMatrix d;
};

Problem five_atom() {
  auto p = fixtures::five_atom_source();
  auto d = squared_error_matrix(p.atoms(), p.atoms());
  return {std::move(p), std::move(d)};
}

TEST(SinkhornRd, AgreesWithBlahutArimotoOnFixture) {
  const auto [p, d] = five_atom();
  for (double lambda : fixtures::log_spaced(0.05, 20.0, 8)) {
    const auto srd = sinkhorn_rd_point(p, d, lambda);
    const auto ba = ba_rd(p, d, lambda);
    ASSERT_TRUE(srd.converged) << lambda;
    EXPECT_NEAR(srd.point.rate_nats, ba.point.rate_nats, 1e-5) << lambda;
    EXPECT_NEAR(srd.point.distortion, ba.point.distortion, 1e-6) << lambda;
  }
}

TEST(SinkhornRd, StationaryPointHasBlahutArimotoForm) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 6; ++trial) {
    const auto p = testing::random_distribution(rng, 5);
    const auto atoms = testing::random_atoms(rng, 5, -1.0, 1.0);
    const auto d = squared_error_matrix(atoms, atoms);
    for (double lambda : {1.0, 5.0, 20.0}) {
      const auto r = sinkhorn_rd_point(p, d, lambda);
      ASSERT_TRUE(r.converged);
      EXPECT_EQ(r.stop, OuterStop::kGradient) << to_string(r.stop);
      EXPECT_LE(r.potential_spread, 1e-6);
      EXPECT_LE(coupling_condition_check(p, r.q_y, d, lambda).max_abs_residual,
                1e-6);
      const auto ba = ba_rd(p, d, lambda);
      EXPECT_NEAR(r.point.rate_nats, ba.point.rate_nats, 1e-5);
      EXPECT_NEAR(r.point.distortion, ba.point.distortion, 1e-6);
    }
  }
}

TEST(SinkhornRd, UpperBoundsTheUnconstrainedInnerProblem) {
  // Fixing the output marginal exactly can only cost more than letting the
  // conditional choose its own output marginal.
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = testing::random_distribution(rng, 4);
    const auto q = testing::random_distribution(rng, 4);
    const auto d = testing::random_cost(rng, 4, 4);
    const double lambda = 0.5 + trial;
    const auto s = sinkhorn(p, q, d, 1.0 / lambda);
    ASSERT_TRUE(s.converged);
    EXPECT_GE(lambda * s.objective,
              ba_inner_objective(p, q.weights(), d, lambda) - 1e-9);
  }
}

TEST(SinkhornRd, BoundIsTightAtTheOptimum) {
  const auto [p, d] = five_atom();
  for (double lambda : {0.5, 2.0, 8.0}) {
    const auto r = sinkhorn_rd_point(p, d, lambda);
    const double lagrangian = lambda * r.inner.objective;
    EXPECT_NEAR(lagrangian, ba_inner_objective(p, r.q_y.weights(), d, lambda),
                1e-8);
  }
}

TEST(SinkhornRd, AcceptedStepsDecreaseTheLagrangian) {
  const auto [p, d] = five_atom();
  for (bool curvature : {true, false}) {
    SinkhornRdOptions opts;
    opts.curvature = curvature;
    std::vector<double> seen;
    opts.on_iteration = [&](int, double v) { seen.push_back(v); };
    const auto r = sinkhorn_rd_point(p, d, 3.0, opts);
    EXPECT_TRUE(r.converged);
    ASSERT_FALSE(seen.empty());
    for (std::size_t k = 1; k < seen.size(); ++k) {
      EXPECT_LE(seen[k], seen[k - 1] + 1e-12);
    }
  }
}

TEST(SinkhornRd, PlainExponentiatedGradientReachesSamePoint) {
  const auto [p, d] = five_atom();
  SinkhornRdOptions plain;
  plain.curvature = false;
  for (double lambda : {0.3, 2.0, 6.0}) {
    const auto a = sinkhorn_rd_point(p, d, lambda);
    const auto b = sinkhorn_rd_point(p, d, lambda, plain);
    EXPECT_TRUE(b.converged);
    EXPECT_NEAR(a.point.rate_nats, b.point.rate_nats, 1e-5);
    EXPECT_NEAR(a.point.distortion, b.point.distortion, 1e-5);
  }
}

TEST(SinkhornRd, BinaryHammingMatchesAnalyticCurve) {
  const auto p = fixtures::binary_uniform_source();
  const auto d = hamming_matrix(2, 2);
  const auto curve =
      rd_sweep_sinkhorn(p, d, fixtures::log_spaced(0.05, 20.0, 20));
  EXPECT_TRUE(curve.all_converged());
  EXPECT_TRUE(curve.is_monotone());
  for (const auto& pt : curve.points()) {
    EXPECT_NEAR(pt.rate_nats, std::log(2.0) - binary_entropy(pt.distortion),
                1e-3);
  }
}

TEST(SinkhornRd, WarmStartedSweepMatchesColdPoints) {
  const auto [p, d] = five_atom();
  const auto lambdas = fixtures::log_spaced(0.1, 10.0, 6);
  const auto curve = rd_sweep_sinkhorn(p, d, lambdas);
  ASSERT_EQ(curve.size(), lambdas.size());
  EXPECT_TRUE(curve.is_monotone());
  for (const auto& pt : curve.points()) {
    const auto cold = sinkhorn_rd_point(p, d, pt.lambda);
    EXPECT_NEAR(pt.rate_nats, cold.point.rate_nats, 1e-5);
  }
}

TEST(SinkhornRd, TinyLambdaCollapsesToOneLetter) {
  const auto [p, d] = five_atom();
  const auto r = sinkhorn_rd_point(p, d, 0.01);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.point.rate_nats, 1e-9);
  EXPECT_NEAR(r.point.distortion, ba_rd(p, d, 0.01).point.distortion, 1e-6);
}

TEST(SinkhornRd, InputErrors) {
  const auto [p, d] = five_atom();
  EXPECT_THROW(sinkhorn_rd_point(p, d, 0.0), std::invalid_argument);
  EXPECT_THROW(sinkhorn_rd_point(p, hamming_matrix(2, 2), 1.0),
               std::invalid_argument);
  EXPECT_THROW(rd_sweep_sinkhorn(p, d, std::vector<double>{}),
               std::invalid_argument);
}

TEST(CouplingCondition, HoldsAtBlahutArimotoOptimum) {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = testing::random_distribution(rng, 5);
    const auto d = testing::random_cost(rng, 5, 5);
    for (double lambda : {0.5, 4.0, 16.0}) {
      const auto ba = ba_rd(p, d, lambda);
      ASSERT_TRUE(ba.converged);
      const auto report = coupling_condition_check(p, ba.q_y, d, lambda);
      EXPECT_LE(report.max_abs_residual, 1e-6);
      EXPECT_EQ(report.residuals.size(), 5u);
    }
  }
}

TEST(CouplingCondition, ExactForUniformCirculantCases) {
  for (std::size_t n : {2u, 3u, 5u, 8u}) {
    const auto u = DiscreteDistribution::uniform(n);
    Matrix circ(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double k = static_cast<double>((j + n - i) % n);
        circ(i, j) = k * (n - k);
      }
    }
    for (double lambda : {0.1, 1.0, 10.0}) {
      EXPECT_LE(coupling_condition_check(u, u, hamming_matrix(n, n), lambda)
                    .max_abs_residual,
                1e-12);
      EXPECT_LE(coupling_condition_check(u, u, DistortionMatrix(circ), lambda)
                    .max_abs_residual,
                1e-12);
    }
  }
}

TEST(CouplingCondition, FailsAwayFromTheOptimum) {
  // Uniform output weights are far from optimal for the skewed fixture.
  const auto [p, d] = five_atom();
  const auto report =
      coupling_condition_check(p, DiscreteDistribution::uniform(5), d, 5.0);
  EXPECT_GT(report.max_abs_residual, 0.01);
}

}  // namespace
}  // namespace rdot
