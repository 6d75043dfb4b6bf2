#pragma once

#include <vector>

#include "mahnmf/matrix.hpp"
#include "mahnmf/prox.hpp"
#include "mahnmf/smoothing.hpp"
#include "mahnmf/solver.hpp"

namespace mahnmf {

/// Extra terms and constraints attached to one orientation of the subproblem.
/// The defaults give the plain non-negative problem.
struct SubproblemHooks {
  bool box = false;
  double alpha = 0.0;                   ///< elastic: + alpha/2 ||X - W^T H||_F^2
  double beta = 0.0;                    ///< manifold: + beta/2 tr(H L H^T)
  const Matrix* laplacian = nullptr;
  double laplacian_norm = 0.0;          ///< upper bound on ||L||_2
  const GroupStructure* groups = nullptr;
  const std::vector<double>* radii = nullptr;  ///< constrained groups only
};

struct SubproblemOptions {
  double lambda = 0.1;
  double tol = 1e-3;
  int max_inner = 500;
  bool monotone_y = false;
  /// Additionally stop once the box duality gap falls below tol (box only).
  bool gap_stop = false;
};

struct SubproblemResult {
  Matrix H;
  int iterations = 0;
  double smoothed = 0.0;  ///< smoothed objective (plus regularisers) at H
  double exact = 0.0;     ///< exact objective (plus regularisers) at H
  bool converged = false;
};

/// Accelerated projected-gradient solve of min_H f_lambda(W, H) + hooks.
///
/// Returns, among the visited points whose smoothed value does not exceed
/// that of H0, the one with the smallest exact objective; H0 itself is
/// always a candidate, so neither value can increase.
SubproblemResult ogm_subproblem(const Matrix& X, const Matrix& W, const Matrix& H0,
                                const SubproblemOptions& options,
                                const SubproblemHooks& hooks = {});

/// Index (0, 1 or 2) of the smallest value; ties go to the earliest.
int monotone_y_choice(double f_prev, double f_current, double f_candidate);

/// The candidate among {Y_prev, H_k, Y_candidate} with the smallest smoothed
/// objective.
Matrix monotone_y_step(const Matrix& X, const Matrix& W, const Matrix& Y_prev,
                       const Matrix& H_k, const Matrix& Y_candidate,
                       const SmoothingState& state);

/// n_cols * big_d * lambda_t / 2.
double inner_tolerance(double lambda_t, double big_d, Index n_cols);

inline constexpr double kMinInnerTol = 1e-8;

/// Smoothed alternating solver with lambda_t = lambda0 / (t + 1).
SolveResult solve_ogm(const Matrix& X, const SolverConfig& cfg,
                      const std::optional<FactorPair>& init = std::nullopt,
                      const OuterObserver& observer = {});

}  // namespace mahnmf
