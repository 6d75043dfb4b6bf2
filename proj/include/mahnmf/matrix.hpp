#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "mahnmf/error.hpp"

namespace mahnmf {

/// Dense row-major storage used for X, W, H and residuals.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// X (m x n) is approximated by W^T H with W: r x m and H: r x n.
struct FactorPair {
  Matrix W;
  Matrix H;

  Index rank() const { return W.rows(); }
};

bool is_nonnegative(const Matrix& A);
void require_same_shape(const Matrix& A, const Matrix& B, const char* what);
void require_nonnegative(const Matrix& A, const char* what);

/// Sum of absolute entry differences.
double manhattan_distance(const Matrix& A, const Matrix& B);

/// Squared Frobenius distance.
double frobenius_sq(const Matrix& A, const Matrix& B);

/// ||X - W^T H||_M.
double objective(const Matrix& X, const FactorPair& F);
double objective(const Matrix& X, const Matrix& W, const Matrix& H);

/// W^T H, with shape checks.
Matrix reconstruct(const Matrix& W, const Matrix& H);

/// Euclidean norm of every column. For a basis W (r x m) entry i is the dual
/// weight of data row i.
Vector column_l2_norms(const Matrix& W);

/// Throws a dimension error unless W (r x m) and H (r x n) compose with X (m x n).
void require_composable(const Matrix& X, const Matrix& W, const Matrix& H);

}  // namespace mahnmf
