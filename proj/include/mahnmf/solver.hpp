#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mahnmf/matrix.hpp"
#include "mahnmf/prox.hpp"

namespace mahnmf {

enum class SolverKind { kOgm, kRri };

enum class VariantKind {
  kPlain,
  kBox,       ///< W, H entries in [0, 1]
  kManifold,  ///< + beta/2 tr(H L H^T)
  kElastic,   ///< + alpha/2 ||X - W^T H||_F^2
  kGroup,     ///< l_{1,p} group sparsity on W and/or H
};

enum class InnerTolRule {
  kAdaptive,  ///< inner_tol_scale * n * D * lambda_t / 2 per half-step, floored at 1e-8
  kFixed,     ///< SolverConfig::inner_tol
};

struct SolverConfig {
  Index rank = 1;
  SolverKind solver = SolverKind::kOgm;
  double lambda0 = 0.1;
  double outer_tol = 0.1;
  InnerTolRule inner_tol_rule = InnerTolRule::kAdaptive;
  double inner_tol = 0.1;
  /// Fraction of the descent bound n * D * lambda_t / 2 used by the adaptive
  /// rule. Any value in (0, 1] keeps the descent argument intact; the bound
  /// itself stops most inner solves after a single step.
  double inner_tol_scale = 1e-3;
  int max_outer = 100;
  int max_inner = 500;
  bool monotone_y = false;
  std::uint64_t seed = 0;
  /// When false the trace reports zero seconds, making it reproducible.
  bool record_timing = true;

  VariantKind variant = VariantKind::kPlain;
  /// Manifold variant: trade-off and graph Laplacian over the n columns of X.
  double beta = 0.0;
  Matrix laplacian;
  /// Elastic-net variant.
  double alpha = 0.0;
  /// Group variant: groups over the m columns of W and/or the n columns of H.
  std::optional<GroupStructure> group_w;
  std::optional<GroupStructure> group_h;

  /// Throws ErrorCode::kConfiguration on inadmissible settings for an m x n input.
  void validate(Index m, Index n) const;
};

struct TraceRecord {
  int t = 0;
  double lambda = 0.0;
  double objective = 0.0;           ///< exact objective of the active variant
  double smoothed_objective = 0.0;  ///< at lambda_t; equals objective for RRI
  int inner_h = 0;
  int inner_w = 0;
  double seconds = 0.0;             ///< cumulative wall time
};

struct ConvergenceTrace {
  double initial_objective = 0.0;
  std::vector<TraceRecord> records;

  /// Columns t,lambda,objective,smoothed_objective,inner_h,inner_w,seconds.
  void write_csv(std::ostream& out) const;
};

struct SolveResult {
  FactorPair factors;
  ConvergenceTrace trace;
  std::vector<std::string> warnings;
  bool converged = false;  ///< outer tolerance met before max_outer
};

/// Called after every outer iteration with its trace record and the
/// accepted factors.
using OuterObserver = std::function<void(const TraceRecord&, const FactorPair&)>;

/// Entries uniform in (0, 1], scaled so mean(W^T H) = mean(X), floored at 1e-10.
FactorPair initialize_factors(const Matrix& X, Index rank, std::uint64_t seed);

inline constexpr double kInitFloor = 1e-10;

/// Exact objective of the configured variant (Manhattan loss plus any
/// regulariser) at (W, H), with group radii/penalties as configured.
double variant_objective(const Matrix& X, const FactorPair& F, const SolverConfig& cfg);

/// Runs the configured solver (OGM or RRI) from `init` or a seeded default.
SolveResult solve(const Matrix& X, const SolverConfig& cfg,
                  const std::optional<FactorPair>& init = std::nullopt,
                  const OuterObserver& observer = {});

}  // namespace mahnmf
