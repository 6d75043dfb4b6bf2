#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <random>

#include "mahnmf/error.hpp"
#include "mahnmf/harness.hpp"
#include "oracles.hpp"

using namespace mahnmf;

namespace {

Index count_nonzero(const Matrix& A) { return (A.array() != 0.0).count(); }

}  // namespace

TEST(Harness, LowRankPlusSparseStructure) {
  const auto d = gen_low_rank_plus_sparse(50, 40, 2, 0.1, 3, 1.5);
  EXPECT_EQ(d.X, d.L + d.S);
  EXPECT_EQ(count_nonzero(d.S), 200);  // exactly 10% of 2000 entries
  EXPECT_TRUE(is_nonnegative(d.L));
  const double peak = d.L.maxCoeff();
  for (Index i = 0; i < d.S.size(); ++i) {
    const double s = d.S.data()[i];
    if (s == 0.0) continue;
    EXPECT_GE(s, 0.5 * 1.5 * peak);
    EXPECT_LT(s, 1.5 * peak);
  }
  const Eigen::JacobiSVD<Matrix> svd(d.L);
  const Vector sv = svd.singularValues();
  EXPECT_GT(sv(1), 1e-8 * sv(0));
  EXPECT_LT(sv(2), 1e-10 * sv(0));
  EXPECT_EQ(d.L, reconstruct(d.truth.W, d.truth.H));
}

TEST(Harness, GeneratorIsSeeded) {
  const auto a = gen_low_rank_plus_sparse(10, 8, 2, 0.2, 7);
  const auto b = gen_low_rank_plus_sparse(10, 8, 2, 0.2, 7);
  const auto c = gen_low_rank_plus_sparse(10, 8, 2, 0.2, 8);
  EXPECT_EQ(a.X, b.X);
  EXPECT_NE(a.X, c.X);
  const auto z = gen_low_rank_plus_sparse(10, 8, 2, 0.0, 7);
  EXPECT_EQ(z.X, z.L);
  EXPECT_THROW(gen_low_rank_plus_sparse(10, 8, 9, 0.1, 1), Error);
  EXPECT_THROW(gen_low_rank_plus_sparse(10, 8, 2, 1.0, 1), Error);
}

TEST(Harness, SaltAndPepper) {
  std::mt19937_64 rng(1);
  const Matrix X = oracle::uniform(100, 100, rng, 0.1, 0.9);
  NoiseSpec spec;
  spec.kind = NoiseKind::kSaltPepper;
  spec.density = 0.2;
  spec.seed = 4;
  const Matrix Y = inject_noise(X, spec);
  const double lo = X.minCoeff(), hi = X.maxCoeff();
  Index changed = 0;
  for (Index i = 0; i < X.size(); ++i) {
    if (Y.data()[i] != X.data()[i]) {
      ++changed;
      EXPECT_TRUE(Y.data()[i] == lo || Y.data()[i] == hi);
    }
  }
  // Binomial(10000, 0.2): five standard deviations is 200.
  EXPECT_NEAR(static_cast<double>(changed), 2000.0, 200.0);
  EXPECT_EQ(inject_noise(X, spec), Y);
}

TEST(Harness, LaplaceMagnitudeAndDensity) {
  const Matrix X = Matrix::Constant(200, 100, 10.0);
  NoiseSpec spec;
  spec.kind = NoiseKind::kLaplace;
  spec.magnitude = 0.5;
  spec.density = 0.3;
  spec.seed = 9;
  const Matrix D = inject_noise(X, spec) - X;
  const Index hit = count_nonzero(D);
  EXPECT_NEAR(static_cast<double>(hit), 6000.0, 5 * std::sqrt(20000 * 0.3 * 0.7));
  // |noise| is exponential with mean equal to the scale; the sign is symmetric.
  EXPECT_NEAR(D.cwiseAbs().sum() / hit, 0.5, 0.03);
  EXPECT_NEAR(D.sum() / hit, 0.0, 0.03);
}

TEST(Harness, GaussianAndPoisson) {
  const Matrix X = Matrix::Constant(200, 100, 5.0);
  NoiseSpec g;
  g.kind = NoiseKind::kGaussian;
  g.magnitude = 0.2;
  g.seed = 2;
  const Matrix D = inject_noise(X, g) - X;
  EXPECT_NEAR(std::sqrt(D.squaredNorm() / D.size()), 0.2, 0.01);

  NoiseSpec p;
  p.kind = NoiseKind::kPoisson;
  p.magnitude = 0.5;  // gain: values are 0.5 * Poisson(10)
  p.seed = 3;
  const Matrix Y = inject_noise(X, p);
  EXPECT_NEAR(Y.mean(), 5.0, 0.05);
  for (Index i = 0; i < Y.size(); ++i) {
    EXPECT_EQ(std::fmod(Y.data()[i], 0.5), 0.0);
  }
}

TEST(Harness, ClampingKeepsNoisyDataNonNegative) {
  const Matrix X = Matrix::Constant(20, 20, 0.01);
  NoiseSpec g;
  g.kind = NoiseKind::kGaussian;
  g.magnitude = 1.0;
  EXPECT_TRUE(is_nonnegative(inject_noise(X, g)));
  g.clamp_nonneg = false;
  EXPECT_FALSE(is_nonnegative(inject_noise(X, g)));
}

TEST(Harness, OcclusionBlocks) {
  std::mt19937_64 rng(5);
  const Matrix X = oracle::uniform(10 * 8, 6, rng, 0.2, 0.8);
  NoiseSpec spec;
  spec.kind = NoiseKind::kOcclusion;
  spec.magnitude = 0.25;  // side 0.5: a 5 x 4 block
  spec.image_rows = 10;
  spec.image_cols = 8;
  spec.seed = 1;
  const Matrix Y = inject_noise(X, spec);
  for (Index j = 0; j < X.cols(); ++j) {
    Index changed = 0;
    Index r_lo = 10, r_hi = -1, c_lo = 8, c_hi = -1;
    for (Index p = 0; p < X.rows(); ++p) {
      if (Y(p, j) == X(p, j)) continue;
      ++changed;
      r_lo = std::min(r_lo, p / 8);
      r_hi = std::max(r_hi, p / 8);
      c_lo = std::min(c_lo, p % 8);
      c_hi = std::max(c_hi, p % 8);
    }
    EXPECT_EQ(changed, 20);
    EXPECT_EQ(r_hi - r_lo + 1, 5);
    EXPECT_EQ(c_hi - c_lo + 1, 4);
  }
  spec.image_rows = 9;
  EXPECT_THROW(inject_noise(X, spec), Error);
}

TEST(Harness, KnnLaplacianProperties) {
  std::mt19937_64 rng(6);
  const Matrix X = oracle::uniform(5, 15, rng);
  const Graph g = knn_laplacian(X, 3);
  EXPECT_EQ(g.similarity, g.similarity.transpose());
  EXPECT_TRUE(g.similarity.diagonal().isZero());
  for (Index a = 0; a < 15; ++a) {
    EXPECT_GE(count_nonzero(g.similarity.row(a)), 3);
    EXPECT_NEAR(g.laplacian.row(a).sum(), 0.0, 1e-12);
  }
  EXPECT_EQ(g.laplacian, laplacian_of(g.similarity));
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(g.laplacian);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  EXPECT_THROW(knn_laplacian(X, 15), Error);
}

TEST(Harness, ImageSimilarityMatchesFormula) {
  std::mt19937_64 rng(7);
  const Matrix img = oracle::uniform(3, 4, rng);
  ImageSimilaritySpec spec;
  spec.cutoff = 1.0;  // keep every pair
  const Matrix A = image_similarity(img, spec);
  ASSERT_EQ(A.rows(), 12);
  double max_f = 0.0;
  for (Index p = 0; p < 12; ++p) {
    for (Index q = 0; q < 12; ++q) max_f = std::max(max_f, std::abs(img(p / 4, p % 4) - img(q / 4, q % 4)));
  }
  const double max_l = std::sqrt(2.0 * 2.0 + 3.0 * 3.0);
  for (Index p = 0; p < 12; ++p) {
    for (Index q = 0; q < 12; ++q) {
      if (p == q) {
        EXPECT_EQ(A(p, q), 1.0);
        continue;
      }
      const double df = std::abs(img(p / 4, p % 4) - img(q / 4, q % 4)) / max_f;
      const double dl = std::hypot(double(p / 4 - q / 4), double(p % 4 - q % 4)) / max_l;
      EXPECT_NEAR(A(p, q), std::exp(-df * df / 0.09) * std::exp(-dl * dl / 0.49), 1e-14);
    }
  }
  spec.cutoff = 0.3;
  const Matrix B = image_similarity(img, spec);
  EXPECT_EQ(B(0, 11), 0.0);  // opposite corners are beyond the cutoff
  EXPECT_EQ(B, B.transpose());
}

TEST(Harness, NormalizedSimilarity) {
  Matrix A(3, 3);
  A << 1, 2, 0, 2, 1, 1, 0, 1, 0;
  const Matrix N = normalize_similarity(A);
  const Vector d = A.rowwise().sum();
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) EXPECT_NEAR(N(i, j), A(i, j) / std::sqrt(d(i) * d(j)), 1e-15);
  }
  Matrix iso = Matrix::Zero(2, 2);
  iso(0, 0) = 4.0;
  const Matrix M = normalize_similarity(iso);
  EXPECT_DOUBLE_EQ(M(0, 0), 1.0);
  EXPECT_EQ(M(1, 1), 0.0);
}

TEST(Harness, Sparseness) {
  Vector one_hot = Vector::Zero(9);
  one_hot(4) = 3.0;
  EXPECT_NEAR(sparseness(one_hot), 1.0, 1e-15);
  EXPECT_NEAR(sparseness(Vector::Constant(9, 0.7)), 0.0, 1e-15);
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    const Vector v = oracle::uniform_vec(10, rng, 0.0, 1.0);
    EXPECT_NEAR(sparseness(v), oracle::hoyer(v), 1e-14);
  }
  try {
    sparseness(Vector::Zero(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefined);
  }
  EXPECT_THROW(sparseness(Vector::Ones(1)), Error);

  Matrix F(3, 3);
  F << 1, 0, 1, 0, 0, 1, 0, 0, 1;  // column 1 is zero and skipped
  EXPECT_NEAR(mean_column_sparseness(F), 0.5 * (1.0 + 0.0), 1e-15);
}

TEST(Harness, RelativeError) {
  Matrix X(1, 2), Y(1, 2);
  X << 3, 4;
  Y << 3, 2;
  EXPECT_DOUBLE_EQ(relative_error(X, Y), 4.0 / 25.0);
  EXPECT_THROW(relative_error(Matrix::Zero(1, 2), Y), Error);
}

TEST(Harness, EucNmfBaseline) {
  std::mt19937_64 rng(9);
  const Matrix W = oracle::uniform(2, 20, rng, 0.1, 1.0);
  const Matrix H = oracle::uniform(2, 15, rng, 0.1, 1.0);
  const Matrix X = reconstruct(W, H);
  const auto res = eucnmf_baseline(X, 2, 5000, 1e-12, 1);
  for (std::size_t i = 1; i < res.objective.size(); ++i) {
    EXPECT_LE(res.objective[i], res.objective[i - 1] * (1 + 1e-12));
  }
  EXPECT_LT(relative_error(X, reconstruct(res.factors.W, res.factors.H)), 1e-4);
  EXPECT_TRUE(is_nonnegative(res.factors.W));
}
