#include <gtest/gtest.h>

#include <random>

#include "mahnmf/error.hpp"
#include "mahnmf/prox.hpp"
#include "oracles.hpp"

using namespace mahnmf;

namespace {

constexpr double kTol = 1e-5;

// Block (|group| x r) of F in the orientation the l_{1,p} norm acts on.
Matrix block_of(const Matrix& F, const std::vector<Index>& g) {
  Matrix B(static_cast<Index>(g.size()), F.rows());
  for (std::size_t a = 0; a < g.size(); ++a) B.row(static_cast<Index>(a)) = F.col(g[a]).transpose();
  return B;
}

}  // namespace

TEST(Prox, ClampBox) {
  Matrix V(1, 4);
  V << -0.5, 0.25, 1.0, 3.0;
  Matrix expected(1, 4);
  expected << 0.0, 0.25, 1.0, 1.0;
  EXPECT_EQ(clamp_box(V), expected);
}

TEST(Prox, L1BallMatchesBisectionOracle) {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_real_distribution<double> rad(0.01, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector v = oracle::uniform_vec(len(rng), rng, -2.0, 2.0);
    const double r = rad(rng);
    const Vector got = project_l1_ball(v, r);
    const Vector want = oracle::project_l1_ball(v, r);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), kTol) << "trial " << trial;
    EXPECT_LE(got.lpNorm<1>(), r + 1e-9);
  }
}

TEST(Prox, L1BallInteriorPointUnchanged) {
  Vector v(3);
  v << 0.1, -0.2, 0.3;
  EXPECT_EQ(project_l1_ball(v, 1.0), v);
}

TEST(Prox, L1pNorm) {
  Matrix M(2, 2);
  M << 3, -1, 4, 2;
  EXPECT_DOUBLE_EQ(l1p_norm(M, GroupNorm::kL2), 5.0 + std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(l1p_norm(M, GroupNorm::kInf), 4.0 + 2.0);
}

class ProxNorms : public ::testing::TestWithParam<GroupNorm> {};

TEST_P(ProxNorms, BallProjectionMatchesOracle) {
  const bool inf = GetParam() == GroupNorm::kInf;
  std::mt19937_64 rng(inf ? 211 : 207);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> frac(0.05, 1.2);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix M = oracle::uniform(dim(rng), dim(rng), rng, -0.5, 1.0);
    const double base = oracle::l1p_norm(M.cwiseMax(0.0), inf);
    const double radius = std::max(1e-3, frac(rng) * base);
    const Matrix got = project_l1p_ball(M, radius, GetParam());
    const Matrix want = oracle::project_l1p_ball(M, radius, inf);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), kTol) << "trial " << trial;
    EXPECT_TRUE(is_nonnegative(got));
    EXPECT_LE(l1p_norm(got, GetParam()), radius * (1 + 1e-9));
  }
}

TEST_P(ProxNorms, ProxMatchesOracle) {
  const bool inf = GetParam() == GroupNorm::kInf;
  std::mt19937_64 rng(inf ? 307 : 301);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> weight(0.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix M = oracle::uniform(dim(rng), dim(rng), rng, -1.0, 1.0);
    const double w = weight(rng);
    const Matrix got = prox_l1p(M, w, GetParam());
    const Matrix want = oracle::prox_l1p(M, w, inf);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), kTol) << "trial " << trial;
  }
}

TEST_P(ProxNorms, ProxBeatsPerturbations) {
  const bool inf = GetParam() == GroupNorm::kInf;
  std::mt19937_64 rng(401);
  const Matrix M = oracle::uniform(4, 3, rng, -1.0, 1.0);
  const double w = 0.4;
  auto cost = [&](const Matrix& Y) {
    return 0.5 * (Y - M).squaredNorm() + w * oracle::l1p_norm(Y, inf);
  };
  const Matrix P = prox_l1p(M, w, GetParam());
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (int k = 0; k < 500; ++k) {
    Matrix Q = P;
    for (Index i = 0; i < Q.size(); ++i) Q.data()[i] += noise(rng);
    EXPECT_LE(cost(P), cost(Q) + 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Norms, ProxNorms, ::testing::Values(GroupNorm::kL2, GroupNorm::kInf),
                         [](const auto& info) {
                           return info.param == GroupNorm::kL2 ? std::string("L2")
                                                               : std::string("Inf");
                         });

TEST(Prox, ProxRejectsNegativeWeight) {
  EXPECT_THROW(prox_l1p(Matrix::Ones(2, 2), -1.0, GroupNorm::kL2), Error);
}

TEST(Prox, GroupsFromRangesAndValidation) {
  auto gs = GroupStructure::from_ranges({{0, 2}, {3, 5}});
  ASSERT_EQ(gs.groups.size(), 2u);
  EXPECT_EQ(gs.groups[1], (std::vector<Index>{3, 4}));
  EXPECT_NO_THROW(gs.validate(5));
  EXPECT_THROW(gs.validate(4), Error);  // index 4 out of range
  gs.groups.push_back({1});
  EXPECT_THROW(gs.validate(6), Error);  // overlap
  EXPECT_THROW(GroupStructure::from_ranges({{2, 2}}), Error);
  auto bad = GroupStructure::from_ranges({{0, 2}});
  bad.radii = {1.0, 2.0};
  EXPECT_THROW(bad.validate(2), Error);
  bad.mode = GroupMode::kPenalized;
  bad.weight = -1.0;
  EXPECT_THROW(bad.validate(2), Error);
}

TEST(Prox, GatherScatterRoundTrip) {
  std::mt19937_64 rng(5);
  const Matrix F = oracle::uniform(3, 6, rng);
  const std::vector<Index> g{1, 4, 5};
  const Matrix B = gather_block(F, g);
  EXPECT_EQ(B, block_of(F, g));
  Matrix G = Matrix::Zero(3, 6);
  scatter_block(G, g, B);
  for (Index c : g) EXPECT_EQ(G.col(c), F.col(c));
  EXPECT_TRUE(G.col(0).isZero());
  EXPECT_DOUBLE_EQ(group_norm(F, g, GroupNorm::kL2), oracle::l1p_norm(B, false));
}

TEST(Prox, ConstrainedGroupStepsProjectEveryGroup) {
  std::mt19937_64 rng(13);
  auto gs = GroupStructure::from_ranges({{0, 3}, {3, 5}});
  gs.norm = GroupNorm::kInf;
  const std::vector<double> radii{0.3, 0.5};
  const Matrix y = oracle::uniform(2, 7, rng, -0.5, 1.0);
  const Matrix z = oracle::uniform(2, 7, rng, -0.5, 1.0);
  const GroupSteps s = ogm_group_steps(y, z, gs, radii, 4.0, 3);
  for (const auto& [point, out] : {std::pair{&y, &s.Y}, std::pair{&z, &s.Z}}) {
    for (std::size_t g = 0; g < gs.groups.size(); ++g) {
      const Matrix want = oracle::project_l1p_ball(block_of(*point, gs.groups[g]), radii[g], true);
      EXPECT_LE((block_of(*out, gs.groups[g]) - want).cwiseAbs().maxCoeff(), kTol);
    }
    // Ungrouped columns are only clipped at zero.
    EXPECT_EQ(out->col(5), point->col(5).cwiseMax(0.0));
    EXPECT_EQ(out->col(6), point->col(6).cwiseMax(0.0));
  }
}

TEST(Prox, PenalizedGroupStepsUseIterationWeights) {
  std::mt19937_64 rng(17);
  auto gs = GroupStructure::from_ranges({{0, 4}});
  gs.mode = GroupMode::kPenalized;
  gs.weight = 0.6;
  const double L = 3.0;
  const int k = 2;
  const Matrix y = oracle::uniform(3, 4, rng, -0.2, 1.0);
  const Matrix z = oracle::uniform(3, 4, rng, -0.2, 1.0);
  const GroupSteps s = ogm_group_steps(y, z, gs, {}, L, k);
  const Matrix want_y = oracle::prox_l1p(block_of(y.cwiseMax(0.0), gs.groups[0]), 0.6 / L, false);
  const Matrix want_z = oracle::prox_l1p(block_of(z.cwiseMax(0.0), gs.groups[0]),
                                         0.6 * (k + 1) * (k + 2) / (4 * L), false);
  EXPECT_LE((block_of(s.Y, gs.groups[0]) - want_y).cwiseAbs().maxCoeff(), kTol);
  EXPECT_LE((block_of(s.Z, gs.groups[0]) - want_z).cwiseAbs().maxCoeff(), kTol);
}
