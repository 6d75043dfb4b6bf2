#pragma once

#include "mahnmf/matrix.hpp"

namespace mahnmf {

/// How zero dual weights (all-zero basis columns) are treated. A data row
/// whose basis column is zero cannot be explained by any H.
enum class DegeneratePolicy {
  kThrow,  ///< raise ErrorCode::kDegenerateBasis
  kDrop,   ///< leave the row out of the smoothed sum
};

/// Smoothing parameter together with the per-row dual weights of a basis.
///
/// The dual weight of data row i is the Euclidean norm of column i of the
/// basis (r x m). `lipschitz` is D / lambda, an upper bound on the Lipschitz
/// constant of the smoothed gradient.
struct SmoothingState {
  double lambda = 0.0;
  Vector dual_weights;
  double big_d = 0.0;
  double lipschitz = 0.0;
  Index degenerate_rows = 0;

  static SmoothingState from_basis(const Matrix& W, double lambda,
                                   DegeneratePolicy policy = DegeneratePolicy::kThrow);
};

/// Huber-type smoothing of |tau|: tau^2/(2 lambda) below lambda, tau - lambda/2 above.
double psi(double tau, double lambda);

/// Maximiser of the smoothed dual: residual_ij / (lambda * w_i) clamped to [-1, 1].
/// `residual` is W^T H - X.
Matrix dual_solution(const Matrix& residual, const SmoothingState& state);

double smoothed_objective(const Matrix& X, const Matrix& W, const Matrix& H,
                          const SmoothingState& state);

/// Gradient of smoothed_objective with respect to H, i.e. W * U with U the
/// dual solution.
Matrix smoothed_gradient(const Matrix& X, const Matrix& W, const Matrix& H,
                         const SmoothingState& state);

struct SmoothedEvaluation {
  double smoothed = 0.0;  ///< f_lambda
  double exact = 0.0;     ///< ||X - W^T H||_M
  Matrix residual;        ///< W^T H - X
  Matrix dual;            ///< U, zero on dropped rows
};

/// One pass over the residual producing the smoothed value, the exact
/// Manhattan value and the dual matrix. The gradient is W * dual.
SmoothedEvaluation evaluate_smoothed(const Matrix& X, const Matrix& W, const Matrix& H,
                                     const SmoothingState& state, bool want_dual = true);

/// Same, reusing the storage already held by `ev`.
void evaluate_smoothed_into(const Matrix& X, const Matrix& W, const Matrix& H,
                            const SmoothingState& state, bool want_dual, SmoothedEvaluation& ev);

/// n * D * lambda / 2: the largest amount by which the smoothed objective can
/// under-estimate the exact objective over n columns.
double sandwich_gap(const SmoothingState& state, Index num_columns);

}  // namespace mahnmf
