#include "mahnmf/prox.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace mahnmf {

GroupStructure GroupStructure::from_ranges(const std::vector<std::pair<Index, Index>>& ranges) {
  GroupStructure gs;
  for (const auto& [first, last] : ranges) {
    if (last <= first) fail(ErrorCode::kConfiguration, "empty group range");
    std::vector<Index> g(static_cast<std::size_t>(last - first));
    std::iota(g.begin(), g.end(), first);
    gs.groups.push_back(std::move(g));
  }
  return gs;
}

void GroupStructure::validate(Index num_columns) const {
  std::vector<char> seen(static_cast<std::size_t>(std::max<Index>(num_columns, 0)), 0);
  for (const auto& g : groups) {
    if (g.empty()) fail(ErrorCode::kConfiguration, "group must not be empty");
    for (Index c : g) {
      if (c < 0 || c >= num_columns) {
        fail(ErrorCode::kConfiguration, "group index " + std::to_string(c) + " out of range");
      }
      if (seen[static_cast<std::size_t>(c)]) {
        fail(ErrorCode::kConfiguration, "groups overlap at index " + std::to_string(c));
      }
      seen[static_cast<std::size_t>(c)] = 1;
    }
  }
  if (mode == GroupMode::kConstrained) {
    if (!radii.empty()) {
      if (radii.size() != groups.size()) {
        fail(ErrorCode::kConfiguration, "one radius per group is required");
      }
      for (double r : radii) {
        if (!(r > 0.0)) fail(ErrorCode::kConfiguration, "group radius must be positive");
      }
    } else if (!(radius_fraction > 0.0)) {
      fail(ErrorCode::kConfiguration, "group radius fraction must be positive");
    }
  } else if (!(weight >= 0.0) || !std::isfinite(weight)) {
    fail(ErrorCode::kConfiguration, "group penalty weight must be non-negative");
  }
}

Matrix clamp_box(const Matrix& V) { return V.cwiseMax(0.0).cwiseMin(1.0); }

Vector project_l1_ball(const Vector& v, double radius) {
  if (!(radius > 0.0)) fail(ErrorCode::kDomain, "l1 ball radius must be positive");
  if (v.cwiseAbs().sum() <= radius) return v;

  std::vector<double> u(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = std::abs(v(i));
  std::sort(u.begin(), u.end(), std::greater<>());

  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - radius) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  Vector x(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v(i)) - theta, 0.0);
    x(i) = v(i) < 0.0 ? -mag : mag;
  }
  return x;
}

double l1p_norm(const Matrix& M, GroupNorm p) {
  double total = 0.0;
  for (Index j = 0; j < M.cols(); ++j) {
    total += p == GroupNorm::kL2 ? M.col(j).norm() : M.col(j).cwiseAbs().maxCoeff();
  }
  return total;
}

namespace {

Matrix project_l12(const Matrix& A, double radius) {
  Vector norms(A.cols());
  for (Index j = 0; j < A.cols(); ++j) norms(j) = A.col(j).norm();
  if (norms.sum() <= radius) return A;
  // Shrinking column norms onto the l1 ball solves the single-multiplier
  // optimality condition exactly.
  const Vector target = project_l1_ball(norms, radius);
  Matrix X = A;
  for (Index j = 0; j < A.cols(); ++j) {
    X.col(j) *= norms(j) > 0.0 ? target(j) / norms(j) : 0.0;
  }
  return X;
}

// Clip levels for the l_{1,inf} projection. Column j is clipped at mu_j(theta)
// where the mass above the clip equals theta; sum_j mu_j is decreasing in theta.
class ClipLevels {
 public:
  explicit ClipLevels(const Matrix& A) : sorted_(A.cols()), prefix_(A.cols()) {
    for (Index j = 0; j < A.cols(); ++j) {
      auto& s = sorted_[static_cast<std::size_t>(j)];
      s.reserve(static_cast<std::size_t>(A.rows()));
      for (Index i = 0; i < A.rows(); ++i) s.push_back(A(i, j));
      std::sort(s.begin(), s.end(), std::greater<>());
      auto& p = prefix_[static_cast<std::size_t>(j)];
      p.resize(s.size() + 1, 0.0);
      for (std::size_t k = 0; k < s.size(); ++k) p[k + 1] = p[k] + s[k];
    }
  }

  Index cols() const { return static_cast<Index>(sorted_.size()); }
  double column_mass(Index j) const { return prefix_[static_cast<std::size_t>(j)].back(); }

  // Returns mu_j(theta) and the number of entries above the clip.
  double level(Index j, double theta, std::size_t* active = nullptr) const {
    const auto& s = sorted_[static_cast<std::size_t>(j)];
    const auto& p = prefix_[static_cast<std::size_t>(j)];
    if (s.empty() || p.back() <= theta) {
      if (active) *active = 0;
      return 0.0;
    }
    for (std::size_t k = 1; k <= s.size(); ++k) {
      const double mu = (p[k] - theta) / static_cast<double>(k);
      const double next = k < s.size() ? s[k] : 0.0;
      if (mu >= next) {
        if (active) *active = k;
        return std::max(mu, 0.0);
      }
    }
    if (active) *active = s.size();
    return 0.0;
  }

  double total(double theta) const {
    double sum = 0.0;
    for (Index j = 0; j < cols(); ++j) sum += level(j, theta);
    return sum;
  }

  double prefix(Index j, std::size_t k) const { return prefix_[static_cast<std::size_t>(j)][k]; }

 private:
  std::vector<std::vector<double>> sorted_;
  std::vector<std::vector<double>> prefix_;
};

Matrix project_l1inf(const Matrix& A, double radius) {
  if (l1p_norm(A, GroupNorm::kInf) <= radius) return A;
  const ClipLevels clip(A);

  double lo = 0.0;
  double hi = 0.0;
  for (Index j = 0; j < clip.cols(); ++j) hi = std::max(hi, clip.column_mass(j));
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (clip.total(mid) > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // With the active sets fixed at hi the condition is linear in theta.
  double theta = hi;
  double num = -radius;
  double den = 0.0;
  for (Index j = 0; j < clip.cols(); ++j) {
    std::size_t k = 0;
    clip.level(j, hi, &k);
    if (k == 0) continue;
    num += clip.prefix(j, k) / static_cast<double>(k);
    den += 1.0 / static_cast<double>(k);
  }
  if (den > 0.0) {
    const double refined = num / den;
    if (refined >= lo && refined <= hi && clip.total(refined) <= radius * (1.0 + 1e-14)) {
      theta = refined;
    }
  }

  Matrix X = A;
  for (Index j = 0; j < A.cols(); ++j) {
    const double mu = clip.level(j, theta);
    X.col(j) = X.col(j).cwiseMin(mu);
  }
  return X;
}

}  // namespace

Matrix project_l1p_ball(const Matrix& M, double radius, GroupNorm p) {
  if (!(radius > 0.0)) fail(ErrorCode::kDomain, "l1p ball radius must be positive");
  const Matrix A = M.cwiseMax(0.0);
  return p == GroupNorm::kL2 ? project_l12(A, radius) : project_l1inf(A, radius);
}

Matrix prox_l1p(const Matrix& M, double weight, GroupNorm p) {
  if (!(weight >= 0.0)) fail(ErrorCode::kDomain, "prox weight must be non-negative");
  if (weight == 0.0) return M;
  Matrix Y = M;
  for (Index j = 0; j < M.cols(); ++j) {
    if (p == GroupNorm::kL2) {
      const double norm = M.col(j).norm();
      Y.col(j) *= norm > weight ? 1.0 - weight / norm : 0.0;
    } else {
      // Moreau: prox of the l_inf norm is the residual of the l1-ball projection.
      const Vector c = M.col(j);
      Y.col(j) = c - project_l1_ball(c, weight);
    }
  }
  return Y;
}

double group_norm(const Matrix& F, const std::vector<Index>& group, GroupNorm p) {
  return l1p_norm(gather_block(F, group), p);
}

Matrix gather_block(const Matrix& F, const std::vector<Index>& group) {
  Matrix block(static_cast<Index>(group.size()), F.rows());
  for (std::size_t a = 0; a < group.size(); ++a) {
    block.row(static_cast<Index>(a)) = F.col(group[a]).transpose();
  }
  return block;
}

void scatter_block(Matrix& F, const std::vector<Index>& group, const Matrix& block) {
  for (std::size_t a = 0; a < group.size(); ++a) {
    F.col(group[a]) = block.row(static_cast<Index>(a)).transpose();
  }
}

void apply_group_projection(Matrix& F, const GroupStructure& groups,
                            const std::vector<double>& radii) {
  for (std::size_t g = 0; g < groups.groups.size(); ++g) {
    const auto& idx = groups.groups[g];
    scatter_block(F, idx, project_l1p_ball(gather_block(F, idx), radii[g], groups.norm));
  }
}

void apply_group_prox(Matrix& F, const GroupStructure& groups, double weight) {
  if (weight == 0.0) return;
  for (const auto& idx : groups.groups) {
    scatter_block(F, idx, prox_l1p(gather_block(F, idx), weight, groups.norm));
  }
}

GroupSteps ogm_group_steps(const Matrix& y_point, const Matrix& z_point,
                           const GroupStructure& groups, const std::vector<double>& radii,
                           double lipschitz, int k) {
  GroupSteps steps{y_point.cwiseMax(0.0), z_point.cwiseMax(0.0)};
  if (groups.mode == GroupMode::kConstrained) {
    apply_group_projection(steps.Y, groups, radii);
    apply_group_projection(steps.Z, groups, radii);
  } else {
    const double kk = static_cast<double>(k);
    apply_group_prox(steps.Y, groups, groups.weight / lipschitz);
    apply_group_prox(steps.Z, groups, groups.weight * (kk + 1.0) * (kk + 2.0) / (4.0 * lipschitz));
  }
  return steps;
}

}  // namespace mahnmf
