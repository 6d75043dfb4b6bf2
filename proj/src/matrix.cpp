#include "mahnmf/matrix.hpp"

#include <cmath>
#include <string>

namespace mahnmf {

namespace {

std::string shape(const Matrix& A) {
  return std::to_string(A.rows()) + "x" + std::to_string(A.cols());
}

}  // namespace

bool is_nonnegative(const Matrix& A) {
  return A.size() == 0 || A.minCoeff() >= 0.0;
}

void require_same_shape(const Matrix& A, const Matrix& B, const char* what) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    fail(ErrorCode::kDimension, std::string(what) + ": shape mismatch " +
                                    shape(A) + " vs " + shape(B));
  }
}

void require_nonnegative(const Matrix& A, const char* what) {
  if (!A.allFinite()) fail(ErrorCode::kDomain, std::string(what) + " has non-finite entries");
  if (!is_nonnegative(A)) fail(ErrorCode::kDomain, std::string(what) + " must be non-negative");
}

double manhattan_distance(const Matrix& A, const Matrix& B) {
  require_same_shape(A, B, "manhattan_distance");
  return (A - B).cwiseAbs().sum();
}

double frobenius_sq(const Matrix& A, const Matrix& B) {
  require_same_shape(A, B, "frobenius_sq");
  return (A - B).squaredNorm();
}

void require_composable(const Matrix& X, const Matrix& W, const Matrix& H) {
  if (W.rows() != H.rows() || W.cols() != X.rows() || H.cols() != X.cols()) {
    fail(ErrorCode::kDimension, "factors do not compose: X " + shape(X) + ", W " +
                                    shape(W) + ", H " + shape(H));
  }
}

Matrix reconstruct(const Matrix& W, const Matrix& H) {
  if (W.rows() != H.rows()) {
    fail(ErrorCode::kDimension, "rank mismatch: W " + shape(W) + ", H " + shape(H));
  }
  return W.transpose() * H;
}

double objective(const Matrix& X, const Matrix& W, const Matrix& H) {
  require_composable(X, W, H);
  return (X - W.transpose() * H).cwiseAbs().sum();
}

double objective(const Matrix& X, const FactorPair& F) { return objective(X, F.W, F.H); }

Vector column_l2_norms(const Matrix& W) {
  Vector norms(W.cols());
  for (Index j = 0; j < W.cols(); ++j) norms(j) = W.col(j).norm();
  return norms;
}

}  // namespace mahnmf
