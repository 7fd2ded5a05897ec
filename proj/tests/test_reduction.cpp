#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace misobf;
using misobf::test::vec;

namespace {

MisoNetwork dim_one_network() {
  MisoNetwork net;
  net.t = {2, 3};
  net.P = {1.0, 1.0};
  net.h = {{vec({1, 0}), vec({0, 1})}, {vec({1, 0, 0}), vec({1, 1, 0})}};
  return net;
}

}  // namespace

TEST(ReduceUserProblem, HandRotationExample) {
  const auto net = dim_one_network();
  InterferenceBudget budget(2);
  budget.set(1, 0, 0.0);
  const auto red = reduce_user_problem(net, 1, budget);
  EXPECT_EQ(red.dim, 1);
  ASSERT_EQ(red.h.size(), 1);
  EXPECT_NEAR(std::abs(red.h(0)), 1.0, 1e-14);
  EXPECT_NEAR(red.h_hat_norm2, 1.0, 1e-14);
  ASSERT_EQ(red.hj.size(), 1u);
  EXPECT_NEAR(red.hj[0](0), 1.0, 1e-14);
  EXPECT_EQ(red.rx[0], 0u);
  EXPECT_TRUE((red.lift * red.lift.transpose()).isIdentity(1e-12));
}

TEST(ReduceUserProblem, SmallTransmitterKeepsCoordinates) {
  auto net = test::three_user_network();
  for (std::size_t j = 0; j < 3; ++j) net.h[2][j] = net.h[2][j].head(2).eval();
  net.t[2] = 2;
  const auto red = reduce_user_problem(net, 2, InterferenceBudget(3));
  EXPECT_EQ(red.dim, 2);
  EXPECT_TRUE(red.h.isApprox(net.h[2][2]));
  EXPECT_EQ(red.h_hat_norm2, 0.0);
  EXPECT_TRUE(red.lift.isIdentity());
}

TEST(ReduceUserProblem, ZeroCrossChannelsConserveNorm) {
  auto net = test::three_user_network();
  net.h[0][1].setZero();
  net.h[0][2].setZero();
  const auto red = reduce_user_problem(net, 0, InterferenceBudget(3));
  EXPECT_NEAR(red.h.squaredNorm() + red.h_hat_norm2, net.direct(0).squaredNorm(), 1e-12);
}

TEST(ReduceUserProblem, PreservesInnerProducts) {
  Rng rng(21);
  InstanceShape shape;
  shape.force_reduction = true;
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng, shape);
    const auto red = reduce_user_problem(inst.net, inst.user, inst.budget);
    const Vector& hd = inst.net.direct(inst.user);
    EXPECT_NEAR(red.h.squaredNorm() + red.h_hat_norm2, hd.squaredNorm(), 1e-10 * hd.squaredNorm());
    for (std::size_t k = 0; k < red.hj.size(); ++k) {
      const Vector& hc = inst.net.h[inst.user][red.rx[k]];
      EXPECT_NEAR(red.hj[k].squaredNorm(), hc.squaredNorm(), 1e-10 * (1.0 + hc.squaredNorm()));
      EXPECT_NEAR(red.hj[k].dot(red.h), hc.dot(hd), 1e-10 * (1.0 + hc.norm() * hd.norm()));
    }
  }
}

TEST(ReduceUserProblem, BadArgumentsThrow) {
  const auto net = dim_one_network();
  EXPECT_THROW(reduce_user_problem(net, 2, InterferenceBudget(2)), Error);
  EXPECT_THROW(reduce_user_problem(net, 0, InterferenceBudget(3)), Error);
}

TEST(LiftSolution, ZeroForcingClosedForm) {
  const auto net = dim_one_network();
  InterferenceBudget budget(2);
  budget.set(1, 0, 0.0);
  const auto red = reduce_user_problem(net, 1, budget);
  const Matrix S = lift_solution(red, Matrix::Zero(1, 1));
  const Vector u = vec({0, 1, 0});
  EXPECT_TRUE(S.isApprox(u * u.transpose(), 1e-12));
  EXPECT_NEAR(net.h[1][1].dot(S * net.h[1][1]), 1.0, 1e-12);
  EXPECT_NEAR(net.h[1][0].dot(S * net.h[1][0]), 0.0, 1e-12);
}

TEST(LiftSolution, NoResidualKeepsTheReducedBlock) {
  auto net = test::three_user_network();
  for (std::size_t j = 0; j < 3; ++j) net.h[2][j] = net.h[2][j].head(2).eval();
  net.t[2] = 2;
  const auto red = reduce_user_problem(net, 2, InterferenceBudget(3));
  const Matrix S11 = test::mat({{0.5, 0.2}, {0.2, 0.3}});
  EXPECT_TRUE(lift_solution(red, S11).isApprox(S11));
}

TEST(LiftSolution, ReproducesReducedConstraintValues) {
  Rng rng(8);
  InstanceShape shape;
  shape.force_reduction = true;
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = random_instance(rng, shape);
    const auto red = reduce_user_problem(inst.net, inst.user, inst.budget);
    const Vector b = rng.unit_vector(red.dim) * std::sqrt(0.5 * red.P);
    const Matrix S = lift_solution(red, b * b.transpose());
    EXPECT_LE(S.trace(), red.P + 1e-10);
    for (std::size_t k = 0; k < red.hj.size(); ++k) {
      const Vector& hc = inst.net.h[inst.user][red.rx[k]];
      const double reduced = red.hj[k].dot(b);
      EXPECT_NEAR(hc.dot(S * hc), reduced * reduced, 1e-10 * (1.0 + reduced * reduced));
    }
  }
}

TEST(LiftSolution, RejectsInvalidBlocks) {
  const auto net = dim_one_network();
  const auto red = reduce_user_problem(net, 1, InterferenceBudget(2));
  EXPECT_THROW(lift_solution(red, Matrix::Zero(2, 2)), Error);
  EXPECT_THROW(lift_solution(red, test::mat({{-1}})), Error);
  EXPECT_THROW(lift_solution(red, test::mat({{5}})), Error);
}
