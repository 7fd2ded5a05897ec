#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace misobf;
using misobf::test::vec;

namespace {

QcqpProblem hand_instance() { return QcqpProblem{vec({1, 1}), {vec({1, 0})}, {0.25}, 1.0}; }

ReducedProblem scalar_reduced(double z2) {
  ReducedProblem red;
  red.dim = 1;
  red.h = vec({1});
  red.h_hat = vec({1});
  red.h_hat_norm2 = 1.0;
  red.hj = {vec({1})};
  red.rx = {1};
  red.z2 = {z2};
  red.P = 1.0;
  red.lift = Matrix::Identity(2, 2);
  return red;
}

}  // namespace

TEST(SolveReducedSdp, UnconstrainedBeamforming) {
  const QcqpProblem p{vec({1, 0}), {vec({0, 1})}, {kInf}, 1.0};
  const auto res = solve_reduced_sdp(p);
  EXPECT_NEAR(res.value, 1.0, 1e-9);
  EXPECT_TRUE(res.S11.isApprox(vec({1, 0}) * vec({1, 0}).transpose(), 1e-7));
}

TEST(SolveReducedSdp, ZeroBudgetOnObjectiveDirection) {
  const QcqpProblem p{vec({1, 0}), {vec({1, 0})}, {0.0}, 1.0};
  EXPECT_NEAR(solve_reduced_sdp(p).value, 0.0, 1e-12);
}

TEST(SolveReducedSdp, HandInstance) {
  const auto res = solve_reduced_sdp(hand_instance());
  EXPECT_NEAR(res.value, 1.8660254037844386, 1e-7);
  bool ok = false;
  const Vector b = reduced_beamformer(hand_instance(), res, ok);
  EXPECT_TRUE(ok);
  EXPECT_NEAR(b(0), 0.5, 1e-6);
  EXPECT_NEAR(b(1), std::sqrt(3.0) / 2.0, 1e-6);
  EXPECT_LE(res.dual_value - res.value, 1e-8);
}

TEST(SolvePowerSplit, NoResidualUsesEverything) {
  auto red = scalar_reduced(0.5);
  red.h_hat = Vector();
  red.h_hat_norm2 = 0.0;
  red.lift = Matrix::Identity(1, 1);
  const auto split = solve_power_split(red);
  EXPECT_EQ(split.Pbar, 1.0);
  EXPECT_NEAR(split.value, 0.5, 1e-9);
}

TEST(SolvePowerSplit, ZeroForcingSendsAllPowerToResidual) {
  const auto split = solve_power_split(scalar_reduced(0.0));
  EXPECT_NEAR(split.Pbar, 0.0, 1e-8);
  EXPECT_NEAR(split.value, 1.0, 1e-9);
}

TEST(SolvePowerSplit, UnconstrainedRecoversFullBeamforming) {
  const auto split = solve_power_split(scalar_reduced(kInf));
  EXPECT_NEAR(split.Pbar, 0.5, 1e-6);
  EXPECT_NEAR(split.value, 2.0, 1e-9);
}

TEST(SolvePowerSplit, GoldenSectionMatchesDenseGrid) {
  Rng rng(17);
  InstanceShape shape;
  shape.force_reduction = true;
  for (int trial = 0; trial < 5; ++trial) {
    const auto inst = random_instance(rng, shape);
    const auto red = reduce_user_problem(inst.net, inst.user, inst.budget);
    const auto split = solve_power_split(red);
    double grid_best = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double Pbar = red.P * k / 200.0;
      const double v = solve_reduced_sdp(qcqp_from_reduced(red, Pbar)).value;
      grid_best = std::max(grid_best, split_objective(v, red.h_hat_norm2, red.P, Pbar));
    }
    EXPECT_GE(split.value, grid_best - 1e-8 * (1.0 + grid_best));
  }
}

TEST(CertifyKkt, HandInstanceMultipliers) {
  const auto p = hand_instance();
  const auto res = solve_reduced_sdp(p);
  const auto cert = certify_kkt(p, res);
  EXPECT_TRUE(cert.pass) << (cert.failures.empty() ? "" : cert.failures.front());
  EXPECT_NEAR(res.lambda(0), 2.0 / std::sqrt(3.0), 1e-6);
  EXPECT_NEAR(res.lambda(1), (1.0 + std::sqrt(3.0)) / std::sqrt(3.0), 1e-6);
  EXPECT_NEAR(cert.C(0, 0), 2.0 / std::sqrt(3.0) - 1.0, 1e-6);
  EXPECT_NEAR(cert.C(0, 1), -1.0, 1e-12);
  EXPECT_NEAR(cert.C(1, 1), -1.0, 1e-12);
  EXPECT_EQ(cert.positive, 1);
  EXPECT_EQ(cert.negative, 1);
}

TEST(CertifyKkt, UnconstrainedInstance) {
  const QcqpProblem p{vec({1, 0}), {vec({0, 1})}, {kInf}, 1.0};
  const auto res = solve_reduced_sdp(p);
  const auto cert = certify_kkt(p, res);
  EXPECT_TRUE(cert.pass);
  EXPECT_NEAR(res.lambda(0), 0.0, 1e-9);
  EXPECT_NEAR(res.lambda(1), 1.0, 1e-7);
  EXPECT_EQ(cert.positive, 0);
  EXPECT_EQ(cert.negative, 1);
}

TEST(CertifyKkt, WrongMultipliersFail) {
  const auto p = hand_instance();
  auto res = solve_reduced_sdp(p);
  res.lambda.setZero();
  const auto cert = certify_kkt(p, res);
  EXPECT_FALSE(cert.pass);
  EXPECT_GT(cert.stationarity, 1e-3);
}

TEST(CertifyKkt, MultiplierCountMismatchThrows) {
  const auto p = hand_instance();
  auto res = solve_reduced_sdp(p);
  res.lambda = vec({1});
  EXPECT_THROW(certify_kkt(p, res), Error);
}

TEST(SolveUser, UnconstrainedSignalsOnShippedNetwork) {
  const auto net = test::three_user_network();
  const double expected[] = {6.72, 14.325, 12.76};
  for (std::size_t u = 0; u < 3; ++u) {
    const auto sol = solve_user(net, u, InterferenceBudget(3));
    EXPECT_TRUE(sol.ok());
    EXPECT_NEAR(sol.signal, expected[u], 1e-7 * expected[u]);
    EXPECT_LE(sol.beamformer.b.squaredNorm(), net.P[u] + 1e-10);
  }
}

TEST(SolveUser, ZeroForcingMatchesProjection) {
  const auto net = test::three_user_network();
  const auto budget = InterferenceBudget::zero_forcing(3);
  for (std::size_t u = 0; u < 3; ++u) {
    Matrix cross(net.t[u], 2);
    int c = 0;
    for (std::size_t j = 0; j < 3; ++j)
      if (j != u) cross.col(c++) = net.h[u][j];
    const Matrix N = linalg::null_space_of_columns(cross);
    const double expected = net.P[u] * (N.transpose() * net.direct(u)).squaredNorm();
    const auto sol = solve_user(net, u, budget);
    EXPECT_TRUE(sol.ok());
    EXPECT_NEAR(sol.signal, expected, 1e-7 * expected);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_LE(sol.leakage[j], 1e-9);
  }
}

TEST(SolveUser, SilentUserWhenDirectChannelIsInCrossSpan) {
  MisoNetwork net;
  net.t = {2, 2, 2};
  net.P = {1.0, 1.0, 1.0};
  net.h = {{vec({1, 0}), vec({0.3, 0.4}), vec({0.2, 0.1})},
           {vec({0.5, 0.1}), vec({0, 1}), vec({0.7, 0.2})},
           {vec({1, 0}), vec({0, 1}), vec({2, 3})}};
  const auto sol = solve_user(net, 2, InterferenceBudget::zero_forcing(3));
  EXPECT_TRUE(sol.ok());
  EXPECT_EQ(sol.beamformer.b.norm(), 0.0);
  EXPECT_EQ(sol.signal, 0.0);
}

TEST(SolveUser, RealizedInterferenceWithinBudget) {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(rng);
    const auto sol = solve_user(inst.net, inst.user, inst.budget);
    EXPECT_TRUE(sol.ok()) << "trial " << trial;
    for (std::size_t j = 0; j < inst.net.users(); ++j)
      if (j != inst.user) EXPECT_LE(sol.leakage[j], inst.budget.get(inst.user, j) + 1e-9);
    EXPECT_NEAR(sol.signal, sol.predicted, 1e-7 * (1.0 + sol.predicted));
  }
}
