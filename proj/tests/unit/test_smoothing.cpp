#include <gtest/gtest.h>

#include <random>

#include "mahnmf/error.hpp"
#include "mahnmf/smoothing.hpp"
#include "oracles.hpp"

using namespace mahnmf;

namespace {

struct Instance {
  Matrix X, W, H;
  double lambda;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 12), rank(1, 4), pick(0, 2);
  const double lambdas[] = {1.0, 0.1, 0.01};
  const Index m = dim(rng), n = dim(rng), r = rank(rng);
  return {oracle::uniform(m, n, rng), oracle::uniform(r, m, rng, 0.05, 1.0),
          oracle::uniform(r, n, rng), lambdas[pick(rng)]};
}

}  // namespace

TEST(Smoothing, PsiBranches) {
  EXPECT_DOUBLE_EQ(psi(0.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(psi(0.25, 0.5), 0.0625);  // 0.25^2 / 1
  EXPECT_DOUBLE_EQ(psi(0.5, 0.5), 0.25);     // both branches agree at the knee
  EXPECT_DOUBLE_EQ(psi(2.0, 0.5), 1.75);
  EXPECT_THROW(psi(-1.0, 0.5), Error);
  EXPECT_THROW(psi(1.0, 0.0), Error);
}

TEST(Smoothing, StateFromBasis) {
  Matrix W(2, 3);
  W << 3, 1, 0, 4, 0, 2;
  const auto s = SmoothingState::from_basis(W, 0.5);
  EXPECT_DOUBLE_EQ(s.dual_weights(0), 5.0);
  EXPECT_DOUBLE_EQ(s.big_d, 8.0);
  EXPECT_DOUBLE_EQ(s.lipschitz, 16.0);
  EXPECT_DOUBLE_EQ(sandwich_gap(s, 10), 10 * 8.0 * 0.5 / 2);
}

TEST(Smoothing, ZeroBasisColumn) {
  Matrix W(2, 3);
  W << 1, 0, 1, 1, 0, 1;
  try {
    SmoothingState::from_basis(W, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateBasis);
  }
  const auto s = SmoothingState::from_basis(W, 0.1, DegeneratePolicy::kDrop);
  EXPECT_EQ(s.degenerate_rows, 1);
  // A dropped row contributes to the exact value only.
  const Matrix X = Matrix::Constant(3, 2, 5.0);
  const Matrix H = Matrix::Ones(2, 2);
  const auto ev = evaluate_smoothed(X, W, H, s);
  EXPECT_DOUBLE_EQ(ev.exact, 2 * 3.0 + 2 * 5.0 + 2 * 3.0);
  EXPECT_TRUE(ev.dual.row(1).isZero());
}

TEST(Smoothing, ValueMatchesVariationalForm) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng);
    const auto s = SmoothingState::from_basis(in.W, in.lambda);
    EXPECT_NEAR(smoothed_objective(in.X, in.W, in.H, s),
                oracle::smoothed_value(in.X, in.W, in.H, in.lambda), 1e-10);
  }
}

TEST(Smoothing, SandwichBound) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng);
    const auto s = SmoothingState::from_basis(in.W, in.lambda);
    const auto ev = evaluate_smoothed(in.X, in.W, in.H, s, false);
    EXPECT_NEAR(ev.exact, objective(in.X, in.W, in.H), 1e-12);
    EXPECT_LE(ev.smoothed, ev.exact + 1e-9);
    EXPECT_LE(ev.exact, ev.smoothed + sandwich_gap(s, in.X.cols()) + 1e-9);
  }
}

TEST(Smoothing, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng);
    const auto s = SmoothingState::from_basis(in.W, in.lambda);
    const Matrix g = smoothed_gradient(in.X, in.W, in.H, s);
    const Matrix fd = oracle::finite_difference(
        [&](const Matrix& P) { return oracle::smoothed_value(in.X, in.W, P, in.lambda); }, in.H,
        1e-6);
    EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, fd.norm())) << "trial " << trial;
  }
}

TEST(Smoothing, DualIsClampedResidualRatio) {
  std::mt19937_64 rng(29);
  const auto in = random_instance(rng);
  const auto s = SmoothingState::from_basis(in.W, in.lambda);
  const Matrix R = in.W.transpose() * in.H - in.X;
  const Matrix U = dual_solution(R, s);
  for (Index i = 0; i < R.rows(); ++i) {
    for (Index j = 0; j < R.cols(); ++j) {
      const double w = in.W.col(i).norm();
      EXPECT_NEAR(U(i, j), std::clamp(R(i, j) / (in.lambda * w), -1.0, 1.0), 1e-14);
    }
  }
}

TEST(Smoothing, GradientIsLipschitzWithDOverLambda) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng);
    const auto s = SmoothingState::from_basis(in.W, in.lambda);
    const Matrix H2 = oracle::uniform(in.H.rows(), in.H.cols(), rng);
    const Matrix g1 = smoothed_gradient(in.X, in.W, in.H, s);
    const Matrix g2 = smoothed_gradient(in.X, in.W, H2, s);
    EXPECT_LE((g1 - g2).norm(), s.lipschitz * (in.H - H2).norm() * (1 + 1e-12));
  }
}

TEST(Smoothing, ReusedBuffersGiveIdenticalResults) {
  std::mt19937_64 rng(37);
  SmoothedEvaluation ev;
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = random_instance(rng);
    const auto s = SmoothingState::from_basis(in.W, in.lambda);
    evaluate_smoothed_into(in.X, in.W, in.H, s, true, ev);
    const auto fresh = evaluate_smoothed(in.X, in.W, in.H, s, true);
    EXPECT_EQ(ev.smoothed, fresh.smoothed);
    EXPECT_EQ(ev.exact, fresh.exact);
    EXPECT_EQ(ev.dual, fresh.dual);
  }
}
