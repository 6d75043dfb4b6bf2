#pragma once

#include <optional>

#include "mahnmf/matrix.hpp"
#include "mahnmf/solver.hpp"

namespace mahnmf {

/// argmin_{x >= 0} sum_i |w_i x - z_i|.
///
/// Zero weights do not depend on x and are ignored. Flat minima resolve to
/// the leftmost minimiser. Returns nullopt when every weight is zero.
std::optional<double> weighted_l1_min(const Vector& weights, const Vector& targets);

/// Unconstrained argmin_x sum_i a_i |x - x_i| + b (x - d)^2.
///
/// `x_breaks` must be non-decreasing; equal breakpoints are merged by summing
/// their weights. Throws a domain error unless a > 0 and b > 0.
double pwl_plus_quadratic_min(const Vector& a, const Vector& x_breaks, double b, double d);

struct RriOptions {
  double tol = 1e-8;      ///< stop when one sweep changes the objective by at most this
  int max_sweeps = 500;
  bool box = false;       ///< clamp every coordinate to [0, 1]
};

/// Rank-one residual iteration on H with W fixed: repeated sweeps over the
/// rows of H, each coordinate set to its exact minimiser.
Matrix rri_update_H(const Matrix& X, const Matrix& W, const Matrix& H,
                    const RriOptions& options, int* sweeps = nullptr);

/// One sweep with every coordinate restricted to [0, 1]. X must lie in [0, 1].
Matrix rri_box_update(const Matrix& X, const Matrix& W, const Matrix& H);

/// One sequential sweep for min ||X - W^T H||_M + beta/2 tr(H L H^T) with
/// L = diag(S 1) - S. `similarity` is n x n, symmetric, non-negative with a
/// zero diagonal.
Matrix rri_manifold_update(const Matrix& X, const Matrix& W, const Matrix& H, double beta,
                           const Matrix& similarity);

/// Alternating RRI solver (plain, box and manifold variants).
SolveResult rri_solve(const Matrix& X, const SolverConfig& cfg,
                      const std::optional<FactorPair>& init = std::nullopt,
                      const OuterObserver& observer = {});

struct SymResult {
  Matrix H;  ///< n x r
  ConvergenceTrace trace;
  bool converged = false;
};

/// min_{H >= 0} ||X - H H^T||_M by exact coordinate updates. Uses cfg.rank,
/// cfg.seed, cfg.outer_tol and cfg.max_outer (one sweep over all of H per
/// outer iteration). X is rescaled by its largest entry internally; the
/// returned H is for the original scale.
SymResult sym_solve(const Matrix& X, const SolverConfig& cfg,
                    const std::optional<Matrix>& init = std::nullopt);

/// The coordinate objective |z_jj - x^2| + 2 sum_{i != j} |z_ij - h_i x|
/// minimised over x >= 0. `z` and `h` are the residual column and the other
/// entries of the component; entry j of `h` is ignored. Ties go to the
/// smaller x.
double sym_coordinate_min(const Vector& z, const Vector& h, Index j);

}  // namespace mahnmf
