#include "mahnmf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "mahnmf/io.hpp"
#include "mahnmf/ogm.hpp"
#include "mahnmf/rri.hpp"
#include "solver_internal.hpp"

namespace mahnmf {

void SolverConfig::validate(Index m, Index n) const {
  auto bad = [](const std::string& msg) { fail(ErrorCode::kConfiguration, msg); };
  if (rank < 1) bad("rank must be at least 1");
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) bad("lambda0 must be positive");
  if (!(outer_tol > 0.0)) bad("outer tolerance must be positive");
  if (inner_tol_rule == InnerTolRule::kFixed && !(inner_tol > 0.0)) {
    bad("inner tolerance must be positive");
  }
  if (!(inner_tol_scale > 0.0 && inner_tol_scale <= 1.0)) bad("inner_tol_scale must be in (0, 1]");
  if (max_outer < 1) bad("max_outer must be at least 1");
  if (max_inner < 1) bad("max_inner must be at least 1");

  switch (variant) {
    case VariantKind::kPlain:
    case VariantKind::kBox:
      break;
    case VariantKind::kManifold:
      if (!(beta >= 0.0) || !std::isfinite(beta)) bad("manifold beta must be non-negative");
      if (laplacian.rows() != n || laplacian.cols() != n) {
        bad("manifold Laplacian must be " + std::to_string(n) + " x " + std::to_string(n));
      }
      if (!laplacian.allFinite()) bad("manifold Laplacian has non-finite entries");
      if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() >
          1e-9 * std::max(1.0, laplacian.cwiseAbs().maxCoeff())) {
        bad("manifold Laplacian must be symmetric");
      }
      break;
    case VariantKind::kElastic:
      if (solver == SolverKind::kRri) bad("the elastic-net variant requires the OGM solver");
      if (!(alpha >= 0.0) || !std::isfinite(alpha)) bad("elastic alpha must be non-negative");
      break;
    case VariantKind::kGroup:
      if (solver == SolverKind::kRri) bad("the group-sparse variant requires the OGM solver");
      if (!group_w && !group_h) bad("group variant needs groups on W or H");
      if (group_w) group_w->validate(m);
      if (group_h) group_h->validate(n);
      break;
  }
}

void ConvergenceTrace::write_csv(std::ostream& out) const {
  out << "t,lambda,objective,smoothed_objective,inner_h,inner_w,seconds\n";
  for (const auto& r : records) {
    out << r.t << ',' << io::format_double(r.lambda) << ',' << io::format_double(r.objective)
        << ',' << io::format_double(r.smoothed_objective) << ',' << r.inner_h << ','
        << r.inner_w << ',' << io::format_double(r.seconds) << '\n';
  }
}

FactorPair initialize_factors(const Matrix& X, Index rank, std::uint64_t seed) {
  if (X.size() == 0) fail(ErrorCode::kDimension, "cannot initialize factors for an empty matrix");
  if (rank < 1) fail(ErrorCode::kConfiguration, "rank must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FactorPair F{Matrix(rank, X.rows()), Matrix(rank, X.cols())};
  // 1 - U[0,1) lies in (0, 1].
  for (Index i = 0; i < F.W.size(); ++i) F.W.data()[i] = 1.0 - unit(rng);
  for (Index i = 0; i < F.H.size(); ++i) F.H.data()[i] = 1.0 - unit(rng);

  const double target = X.mean();
  const double current = (F.W.transpose() * F.H).mean();
  const double scale = std::sqrt(std::max(target, 0.0) / current);
  F.W = (F.W * scale).cwiseMax(kInitFloor);
  F.H = (F.H * scale).cwiseMax(kInitFloor);
  return F;
}

double variant_objective(const Matrix& X, const FactorPair& F, const SolverConfig& cfg) {
  const Matrix R = reconstruct(F.W, F.H) - X;
  double value = R.cwiseAbs().sum();
  switch (cfg.variant) {
    case VariantKind::kManifold:
      if (cfg.beta > 0.0) value += 0.5 * cfg.beta * F.H.cwiseProduct(F.H * cfg.laplacian).sum();
      break;
    case VariantKind::kElastic:
      value += 0.5 * cfg.alpha * R.squaredNorm();
      break;
    case VariantKind::kGroup: {
      auto penalty = [](const Matrix& M, const std::optional<GroupStructure>& gs) {
        if (!gs || gs->mode != GroupMode::kPenalized) return 0.0;
        double q = 0.0;
        for (const auto& g : gs->groups) q += group_norm(M, g, gs->norm);
        return gs->weight * q;
      };
      value += penalty(F.W, cfg.group_w) + penalty(F.H, cfg.group_h);
      break;
    }
    default:
      break;
  }
  return value;
}

namespace detail {

namespace {

std::vector<double> derive_radii(Matrix& F, const GroupStructure& gs) {
  if (gs.mode != GroupMode::kConstrained) return {};
  std::vector<double> radii = gs.radii;
  if (radii.empty()) {
    for (const auto& g : gs.groups) {
      const double norm = group_norm(F, g, gs.norm);
      radii.push_back(norm > 0.0 ? gs.radius_fraction * norm : gs.radius_fraction);
    }
  }
  F = F.cwiseMax(0.0);
  apply_group_projection(F, gs, radii);
  return radii;
}

}  // namespace

PreparedRun prepare_run(const Matrix& X, const SolverConfig& cfg,
                        const std::optional<FactorPair>& init) {
  if (X.size() == 0) fail(ErrorCode::kDimension, "input matrix is empty");
  require_nonnegative(X, "X");
  cfg.validate(X.rows(), X.cols());

  PreparedRun run;
  if (init) {
    if (init->W.rows() != cfg.rank || init->H.rows() != cfg.rank) {
      fail(ErrorCode::kDimension, "initial factors do not have the configured rank");
    }
    require_composable(X, init->W, init->H);
    require_nonnegative(init->W, "initial W");
    require_nonnegative(init->H, "initial H");
    run.F = *init;
  } else {
    run.F = initialize_factors(X, cfg.rank, cfg.seed);
  }

  if (cfg.variant == VariantKind::kBox) {
    run.F.W = clamp_box(run.F.W);
    run.F.H = clamp_box(run.F.H);
  } else if (cfg.variant == VariantKind::kGroup) {
    if (cfg.group_w) run.radii_w = derive_radii(run.F.W, *cfg.group_w);
    if (cfg.group_h) run.radii_h = derive_radii(run.F.H, *cfg.group_h);
  }
  return run;
}

double symmetric_norm_bound(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace detail

SolveResult solve(const Matrix& X, const SolverConfig& cfg,
                  const std::optional<FactorPair>& init, const OuterObserver& observer) {
  return cfg.solver == SolverKind::kRri ? rri_solve(X, cfg, init, observer)
                                        : solve_ogm(X, cfg, init, observer);
}

}  // namespace mahnmf
