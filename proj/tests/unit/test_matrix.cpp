#include <gtest/gtest.h>

#include <random>

#include "mahnmf/error.hpp"
#include "mahnmf/matrix.hpp"
#include "oracles.hpp"

using namespace mahnmf;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no mahnmf::Error thrown";
  return ErrorCode::kUndefined;
}

}  // namespace

TEST(Matrix, ManhattanDistanceSumsAbsoluteDifferences) {
  Matrix A(2, 2), B(2, 2);
  A << 1, -2, 3, 0.5;
  B << 0, 2, 3, -0.5;
  EXPECT_DOUBLE_EQ(manhattan_distance(A, B), 1 + 4 + 0 + 1);
  EXPECT_DOUBLE_EQ(manhattan_distance(A, A), 0.0);
}

TEST(Matrix, FrobeniusSquared) {
  Matrix A(1, 3), B(1, 3);
  A << 1, 2, 3;
  B << 0, 0, 1;
  EXPECT_DOUBLE_EQ(frobenius_sq(A, B), 1 + 4 + 4);
}

TEST(Matrix, ObjectiveMatchesEntrywiseLoop) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix X = oracle::uniform(6, 5, rng);
    const Matrix W = oracle::uniform(3, 6, rng);
    const Matrix H = oracle::uniform(3, 5, rng);
    double expected = 0.0;
    for (Index i = 0; i < 6; ++i) {
      for (Index j = 0; j < 5; ++j) {
        double v = 0.0;
        for (Index l = 0; l < 3; ++l) v += W(l, i) * H(l, j);
        expected += std::abs(X(i, j) - v);
      }
    }
    EXPECT_NEAR(objective(X, W, H), expected, 1e-12);
    EXPECT_NEAR(objective(X, FactorPair{W, H}), expected, 1e-12);
  }
}

TEST(Matrix, ExactFactorisationHasZeroObjective) {
  std::mt19937_64 rng(3);
  const Matrix W = oracle::uniform(2, 7, rng);
  const Matrix H = oracle::uniform(2, 4, rng);
  const Matrix X = reconstruct(W, H);
  EXPECT_EQ(X.rows(), 7);
  EXPECT_EQ(X.cols(), 4);
  EXPECT_NEAR(objective(X, W, H), 0.0, 1e-14);
}

TEST(Matrix, ShapeErrors) {
  const Matrix X = Matrix::Zero(4, 3);
  EXPECT_EQ(code_of([&] { require_composable(X, Matrix::Zero(2, 5), Matrix::Zero(2, 3)); }),
            ErrorCode::kDimension);
  EXPECT_EQ(code_of([&] { require_composable(X, Matrix::Zero(2, 4), Matrix::Zero(3, 3)); }),
            ErrorCode::kDimension);
  EXPECT_EQ(code_of([&] { reconstruct(Matrix::Zero(2, 4), Matrix::Zero(1, 3)); }),
            ErrorCode::kDimension);
  EXPECT_EQ(code_of([&] { require_same_shape(X, Matrix::Zero(3, 4), "A"); }),
            ErrorCode::kDimension);
  EXPECT_NO_THROW(require_composable(X, Matrix::Zero(2, 4), Matrix::Zero(2, 3)));
}

TEST(Matrix, NonNegativity) {
  Matrix A(2, 2);
  A << 0, 1, 2, 3;
  EXPECT_TRUE(is_nonnegative(A));
  EXPECT_NO_THROW(require_nonnegative(A, "A"));
  A(1, 0) = -1e-300;
  EXPECT_FALSE(is_nonnegative(A));
  EXPECT_EQ(code_of([&] { require_nonnegative(A, "A"); }), ErrorCode::kDomain);
  A(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { require_nonnegative(A, "A"); }), ErrorCode::kDomain);
}

TEST(Matrix, ColumnNorms) {
  Matrix W(2, 3);
  W << 3, 0, 1, 4, 0, 1;
  const Vector n = column_l2_norms(W);
  ASSERT_EQ(n.size(), 3);
  EXPECT_DOUBLE_EQ(n(0), 5.0);
  EXPECT_DOUBLE_EQ(n(1), 0.0);
  EXPECT_DOUBLE_EQ(n(2), std::sqrt(2.0));
}
