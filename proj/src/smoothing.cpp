#include "mahnmf/smoothing.hpp"

#include <algorithm>
#include <cmath>

namespace mahnmf {

SmoothingState SmoothingState::from_basis(const Matrix& W, double lambda,
                                          DegeneratePolicy policy) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    fail(ErrorCode::kDomain, "smoothing parameter must be positive");
  }
  SmoothingState state;
  state.lambda = lambda;
  state.dual_weights = column_l2_norms(W);
  state.degenerate_rows = (state.dual_weights.array() == 0.0).count();
  if (state.degenerate_rows > 0 && policy == DegeneratePolicy::kThrow) {
    fail(ErrorCode::kDegenerateBasis,
         std::to_string(state.degenerate_rows) + " basis column(s) are identically zero");
  }
  state.big_d = state.dual_weights.sum();
  state.lipschitz = state.big_d / lambda;
  return state;
}

double psi(double tau, double lambda) {
  if (!(tau >= 0.0)) fail(ErrorCode::kDomain, "psi: tau must be non-negative");
  if (!(lambda > 0.0)) fail(ErrorCode::kDomain, "psi: lambda must be positive");
  return tau <= lambda ? tau * tau / (2.0 * lambda) : tau - 0.5 * lambda;
}

Matrix dual_solution(const Matrix& residual, const SmoothingState& state) {
  if (residual.rows() != state.dual_weights.size()) {
    fail(ErrorCode::kDimension, "dual_solution: residual rows do not match dual weights");
  }
  if (state.dual_weights.size() > 0 && state.dual_weights.minCoeff() <= 0.0) {
    fail(ErrorCode::kDegenerateBasis, "dual_solution: zero dual weight");
  }
  Matrix U(residual.rows(), residual.cols());
  for (Index i = 0; i < residual.rows(); ++i) {
    const double scale = 1.0 / (state.lambda * state.dual_weights(i));
    for (Index j = 0; j < residual.cols(); ++j) {
      U(i, j) = std::clamp(residual(i, j) * scale, -1.0, 1.0);
    }
  }
  return U;
}

SmoothedEvaluation evaluate_smoothed(const Matrix& X, const Matrix& W, const Matrix& H,
                                     const SmoothingState& state, bool want_dual) {
  SmoothedEvaluation ev;
  evaluate_smoothed_into(X, W, H, state, want_dual, ev);
  return ev;
}

void evaluate_smoothed_into(const Matrix& X, const Matrix& W, const Matrix& H,
                            const SmoothingState& state, bool want_dual, SmoothedEvaluation& ev) {
  require_composable(X, W, H);
  if (state.dual_weights.size() != X.rows()) {
    fail(ErrorCode::kDimension, "smoothing state was built for a different basis");
  }
  ev.residual.noalias() = W.transpose() * H;
  ev.residual -= X;
  if (want_dual) ev.dual.resize(X.rows(), X.cols());

  const double lambda = state.lambda;
  double smoothed = 0.0;
  double exact = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double w = state.dual_weights(i);
    const auto r = ev.residual.row(i);
    if (w <= 0.0) {
      // Dropped row: constant in H, no smoothed contribution.
      exact += r.cwiseAbs().sum();
      if (want_dual) ev.dual.row(i).setZero();
      continue;
    }
    // w * psi(|r| / w): r^2 / (2 lambda w) when |r| <= lambda w, |r| - lambda w / 2 otherwise.
    const double knee = lambda * w;
    const double inv_knee = 1.0 / knee;
    for (Index j = 0; j < X.cols(); ++j) {
      const double v = r(j);
      const double a = std::abs(v);
      exact += a;
      if (a <= knee) {
        smoothed += 0.5 * v * v * inv_knee;
        if (want_dual) ev.dual(i, j) = v * inv_knee;
      } else {
        smoothed += a - 0.5 * knee;
        if (want_dual) ev.dual(i, j) = v > 0.0 ? 1.0 : -1.0;
      }
    }
  }
  ev.smoothed = smoothed;
  ev.exact = exact;
}

double smoothed_objective(const Matrix& X, const Matrix& W, const Matrix& H,
                          const SmoothingState& state) {
  if (state.degenerate_rows > 0) {
    fail(ErrorCode::kDegenerateBasis, "smoothed_objective: zero dual weight");
  }
  return evaluate_smoothed(X, W, H, state, false).smoothed;
}

Matrix smoothed_gradient(const Matrix& X, const Matrix& W, const Matrix& H,
                         const SmoothingState& state) {
  if (state.degenerate_rows > 0) {
    fail(ErrorCode::kDegenerateBasis, "smoothed_gradient: zero dual weight");
  }
  const SmoothedEvaluation ev = evaluate_smoothed(X, W, H, state, true);
  return W * ev.dual;
}

double sandwich_gap(const SmoothingState& state, Index num_columns) {
  return static_cast<double>(num_columns) * state.big_d * state.lambda / 2.0;
}

}  // namespace mahnmf
