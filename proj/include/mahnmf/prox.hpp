#pragma once

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mahnmf/matrix.hpp"

namespace mahnmf {

enum class GroupNorm { kL2, kInf };

enum class GroupMode {
  kConstrained,  ///< ||block||_{1,p} <= radius per group
  kPenalized,    ///< + weight * ||block||_{1,p} per group
};

/// Non-overlapping groups of column indices of the factor being updated.
///
/// For a group rho the block norm is sum_l ||F(l, rho)||_p, i.e. the l_{1,p}
/// norm of the transposed block F^{[rho]T} whose columns are the rank
/// components restricted to the group.
struct GroupStructure {
  std::vector<std::vector<Index>> groups;
  GroupNorm norm = GroupNorm::kL2;
  GroupMode mode = GroupMode::kConstrained;
  /// Constrained mode: one radius per group. Empty means "derive from the
  /// initial factor" using radius_fraction.
  std::vector<double> radii;
  double radius_fraction = 0.01;
  /// Penalized mode weight.
  double weight = 0.0;

  /// Builds groups from half-open index ranges [first, last).
  static GroupStructure from_ranges(const std::vector<std::pair<Index, Index>>& ranges);

  /// Throws unless groups are disjoint, lie in [0, num_columns) and the
  /// parameters are admissible.
  void validate(Index num_columns) const;
};

/// Entry-wise median with 0 and 1.
Matrix clamp_box(const Matrix& V);

/// Euclidean projection onto { x : ||x||_1 <= radius } (sort-based).
Vector project_l1_ball(const Vector& v, double radius);

/// l_{1,p} norm of a block: sum over columns of the column p-norm.
double l1p_norm(const Matrix& M, GroupNorm p);

/// Euclidean projection of max(0, M) onto { X >= 0, ||X||_{1,p} <= radius }.
Matrix project_l1p_ball(const Matrix& M, double radius, GroupNorm p);

/// argmin_Y 1/2 ||Y - M||_F^2 + weight * ||Y||_{1,p}.
Matrix prox_l1p(const Matrix& M, double weight, GroupNorm p);

/// Group norm sum_l ||F(l, rho)||_p of one group of columns of F.
double group_norm(const Matrix& F, const std::vector<Index>& group, GroupNorm p);

/// Extracts the transposed block F^{[rho]T} (|rho| x r).
Matrix gather_block(const Matrix& F, const std::vector<Index>& group);
void scatter_block(Matrix& F, const std::vector<Index>& group, const Matrix& block);

/// The Y and Z points of one accelerated-gradient iteration under group
/// sparsity. `y_point` is H_k - grad/L and `z_point` is H_0 - acc/L, both before any
/// projection. Columns outside every group are projected onto the
/// non-negative orthant only.
struct GroupSteps {
  Matrix Y;
  Matrix Z;
};
GroupSteps ogm_group_steps(const Matrix& y_point, const Matrix& z_point,
                           const GroupStructure& groups, const std::vector<double>& radii,
                           double lipschitz, int k);

/// In-place versions used by the solver.
void apply_group_projection(Matrix& F, const GroupStructure& groups,
                            const std::vector<double>& radii);
void apply_group_prox(Matrix& F, const GroupStructure& groups, double weight);

}  // namespace mahnmf
