#include <gtest/gtest.h>

#include <random>

#include "mahnmf/error.hpp"
#include "mahnmf/harness.hpp"
#include "mahnmf/rri.hpp"
#include "oracles.hpp"

using namespace mahnmf;

namespace {

constexpr double kGridStep = 1e-5;

Matrix rank_one(Index m, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vector u = oracle::uniform_vec(m, rng, 0.1, 1.0);
  const Vector v = oracle::uniform_vec(n, rng, 0.1, 1.0);
  return u * v.transpose();
}

double manifold_objective(const Matrix& X, const Matrix& W, const Matrix& H, double beta,
                          const Matrix& S) {
  const Matrix L = laplacian_of(S);
  return objective(X, W, H) + 0.5 * beta * (H * L * H.transpose()).trace();
}

}  // namespace

TEST(Rri, WeightedL1MatchesGrid) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const Index m = len(rng);
    const Vector w = oracle::uniform_vec(m, rng, 0.2, 1.0);
    const Vector z = oracle::uniform_vec(m, rng, -0.2, 1.0);
    const auto got = weighted_l1_min(w, z);
    ASSERT_TRUE(got.has_value());
    const double want = oracle::grid_argmin(
        [&](double x) { return oracle::weighted_l1(w, z, x); }, 0.0, 5.0, kGridStep);
    EXPECT_NEAR(*got, want, 1e-4) << "trial " << trial;
  }
}

TEST(Rri, WeightedL1EdgeCases) {
  Vector w(2), z(2);
  w << 0.0, 0.0;
  z << 1.0, 2.0;
  EXPECT_FALSE(weighted_l1_min(w, z).has_value());
  // Zero weights are ignored.
  w << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(*weighted_l1_min(w, z), 1.0);
  // All breakpoints negative: clipped at zero.
  w << 1.0, 1.0;
  z << -1.0, -2.0;
  EXPECT_DOUBLE_EQ(*weighted_l1_min(w, z), 0.0);
  // Flat minimum on [1, 2] resolves to the left end.
  z << 1.0, 2.0;
  EXPECT_DOUBLE_EQ(*weighted_l1_min(w, z), 1.0);
}

TEST(Rri, PwlPlusQuadraticMatchesGrid) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_real_distribution<double> bdist(0.5, 5.0), ddist(-0.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index m = len(rng);
    const Vector a = oracle::uniform_vec(m, rng, 0.05, 0.5);
    Vector xs = oracle::uniform_vec(m, rng, 0.0, 1.0);
    std::sort(xs.data(), xs.data() + m);
    const double b = bdist(rng), d = ddist(rng);
    const double reach = a.sum() / (2 * b);
    const double got = pwl_plus_quadratic_min(a, xs, b, d);
    const double want = oracle::grid_argmin(
        [&](double x) { return oracle::pwl_quadratic(a, xs, b, d, x); }, d - reach - 1e-3,
        d + reach + 1e-3, kGridStep);
    EXPECT_NEAR(got, want, 1e-4) << "trial " << trial;
  }
}

TEST(Rri, PwlPlusQuadraticClosedFormBranches) {
  Vector a(2), xs(2);
  a << 1.0, 1.0;
  xs << 0.0, 1.0;
  // Left of everything: d - k_1 / (2b) with k_1 = -2.
  EXPECT_DOUBLE_EQ(pwl_plus_quadratic_min(a, xs, 1.0, -5.0), -4.0);
  // Right of everything: d - k_3 / (2b) with k_3 = 2.
  EXPECT_DOUBLE_EQ(pwl_plus_quadratic_min(a, xs, 1.0, 5.0), 4.0);
  // Pinned at a breakpoint.
  EXPECT_DOUBLE_EQ(pwl_plus_quadratic_min(a, xs, 1.0, 1.5), 1.0);
  // Duplicate breakpoints merge.
  xs << 0.5, 0.5;
  EXPECT_DOUBLE_EQ(pwl_plus_quadratic_min(a, xs, 1.0, 0.9), 0.5);
  EXPECT_THROW(pwl_plus_quadratic_min(a, xs, 0.0, 0.0), Error);
  a << 1.0, 0.0;
  EXPECT_THROW(pwl_plus_quadratic_min(a, xs, 1.0, 0.0), Error);
}

TEST(Rri, UpdateHIsCoordinatewiseOptimal) {
  std::mt19937_64 rng(3);
  const Matrix X = oracle::uniform(8, 6, rng);
  const Matrix W = oracle::uniform(2, 8, rng, 0.1, 1.0);
  const Matrix H0 = oracle::uniform(2, 6, rng);
  RriOptions opts;
  opts.tol = 1e-13;
  int sweeps = 0;
  const Matrix H = rri_update_H(X, W, H0, opts, &sweeps);
  EXPECT_GE(sweeps, 1);
  EXPECT_LE(objective(X, W, H), objective(X, W, H0));
  for (Index l = 0; l < H.rows(); ++l) {
    for (Index j = 0; j < H.cols(); ++j) {
      Matrix P = H;
      const double best = oracle::grid_argmin(
          [&](double x) {
            P(l, j) = x;
            return objective(X, W, P);
          },
          0.0, 3.0, 1e-4);
      P(l, j) = best;
      EXPECT_LE(objective(X, W, H), objective(X, W, P) + 1e-9);
    }
  }
}

TEST(Rri, BoxUpdate) {
  std::mt19937_64 rng(4);
  const Matrix X = oracle::uniform(7, 5, rng);
  const Matrix W = oracle::uniform(2, 7, rng, 0.0, 0.3);
  const Matrix H0 = oracle::uniform(2, 5, rng);
  const Matrix H = rri_box_update(X, W, H0);
  EXPECT_GE(H.minCoeff(), 0.0);
  EXPECT_LE(H.maxCoeff(), 1.0);
  EXPECT_LE(objective(X, W, H), objective(X, W, H0) + 1e-12);
  EXPECT_THROW(rri_box_update(X * 3.0, W, H0), Error);
}

TEST(Rri, ManifoldSweepDescends) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix X = oracle::uniform(8, 7, rng);
    const Matrix W = oracle::uniform(2, 8, rng, 0.1, 1.0);
    const Matrix H0 = oracle::uniform(2, 7, rng);
    const Matrix S = knn_laplacian(X, 3).similarity;
    const double beta = 0.7;
    const Matrix H = rri_manifold_update(X, W, H0, beta, S);
    EXPECT_TRUE(is_nonnegative(H));
    EXPECT_LE(manifold_objective(X, W, H, beta, S),
              manifold_objective(X, W, H0, beta, S) + 1e-10);
  }
}

TEST(Rri, SolveTracesAreMonotone) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix X = oracle::uniform(20, 10, rng);
    SolverConfig cfg;
    cfg.solver = SolverKind::kRri;
    cfg.rank = 3;
    cfg.seed = seed;
    cfg.outer_tol = 1e-8;
    cfg.max_outer = 40;
    const auto res = rri_solve(X, cfg);
    double prev = res.trace.initial_objective;
    for (const auto& r : res.trace.records) {
      EXPECT_LE(r.objective, prev + 1e-8);
      prev = r.objective;
    }
  }
}

TEST(Rri, RankOneRecovery) {
  const Matrix X = rank_one(30, 20, 6);
  SolverConfig cfg;
  cfg.solver = SolverKind::kRri;
  cfg.outer_tol = 1e-12;
  cfg.max_outer = 200;
  const auto res = rri_solve(X, cfg);
  EXPECT_LE(objective(X, res.factors), 1e-6 * X.cwiseAbs().sum());
}

TEST(Rri, BoxAndManifoldVariants) {
  std::mt19937_64 rng(7);
  const Matrix X = oracle::uniform(12, 9, rng);
  SolverConfig cfg;
  cfg.solver = SolverKind::kRri;
  cfg.rank = 2;
  cfg.max_outer = 10;
  cfg.variant = VariantKind::kBox;
  const auto box = rri_solve(X, cfg);
  EXPECT_GE(box.factors.W.minCoeff(), 0.0);
  EXPECT_LE(box.factors.W.maxCoeff(), 1.0);
  EXPECT_LE(box.factors.H.maxCoeff(), 1.0);

  SolverConfig plain = cfg;
  plain.variant = VariantKind::kPlain;
  SolverConfig mani = plain;
  mani.variant = VariantKind::kManifold;
  mani.beta = 0.0;
  mani.laplacian = knn_laplacian(X, 3).laplacian;
  const auto a = rri_solve(X, plain);
  const auto b = rri_solve(X, mani);
  EXPECT_EQ(a.factors.W, b.factors.W);
  EXPECT_EQ(a.factors.H, b.factors.H);

  mani.beta = 0.5;
  const auto c = rri_solve(X, mani);
  double prev = c.trace.initial_objective;
  for (const auto& r : c.trace.records) {
    EXPECT_LE(r.objective, prev + 1e-8);
    prev = r.objective;
  }
}

TEST(Rri, SymCoordinateMatchesGrid) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> len(2, 7);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = len(rng);
    const Vector z = oracle::uniform_vec(n, rng, -0.5, 1.0);
    const Vector h = oracle::uniform_vec(n, rng, 0.0, 1.0);
    const Index j = trial % n;
    const double got = sym_coordinate_min(z, h, j);
    const double want = oracle::grid_argmin(
        [&](double x) { return oracle::sym_coordinate(z, h, j, x); }, 0.0, 6.0, kGridStep);
    // Compare values: the coordinate objective can have several minimisers.
    EXPECT_LE(oracle::sym_coordinate(z, h, j, got), oracle::sym_coordinate(z, h, j, want) + 1e-9)
        << "trial " << trial;
    EXPECT_GE(got, 0.0);
  }
}

TEST(Rri, SymSolveExactCases) {
  std::mt19937_64 rng(9);
  const Vector h = oracle::uniform_vec(12, rng, 0.1, 1.0);
  const Matrix X = h * h.transpose();
  SolverConfig cfg;
  cfg.outer_tol = 1e-12;
  cfg.max_outer = 300;
  const auto res = sym_solve(X, cfg);
  ASSERT_EQ(res.H.rows(), 12);
  ASSERT_EQ(res.H.cols(), 1);
  EXPECT_LE((X - res.H * res.H.transpose()).cwiseAbs().sum(), 1e-6 * X.cwiseAbs().sum());
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& r : res.trace.records) {
    EXPECT_LE(r.objective, prev + 1e-10);
    prev = r.objective;
  }

  cfg.rank = 5;
  const Matrix I = Matrix::Identity(5, 5);
  const auto id = sym_solve(I, cfg);
  EXPECT_LE((I - id.H * id.H.transpose()).cwiseAbs().sum(), 1e-9);
  EXPECT_THROW(sym_solve(Matrix::Ones(3, 4), cfg), Error);
}
