#include "mahnmf/rri.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "solver_internal.hpp"

namespace mahnmf {

namespace {

constexpr double kRriMinTol = 1e-8;

struct Breakpoint {
  double p;
  double w;
};

// Sorts by position and merges equal positions, summing their weights.
void sort_and_merge(std::vector<Breakpoint>& bp) {
  std::sort(bp.begin(), bp.end(), [](const Breakpoint& a, const Breakpoint& b) { return a.p < b.p; });
  std::size_t out = 0;
  for (std::size_t s = 0; s < bp.size(); ++s) {
    if (out > 0 && bp[out - 1].p == bp[s].p) {
      bp[out - 1].w += bp[s].w;
    } else {
      bp[out++] = bp[s];
    }
  }
  bp.resize(out);
}

// Leftmost breakpoint at which the slope of sum w |x - p| turns non-negative.
// The slope starts at -sum(w) and rises by 2w at every breakpoint.
double leftmost_median(std::vector<Breakpoint>& bp, double total) {
  sort_and_merge(bp);
  const double slack = 1e-12 * total;
  double slope = -total;
  for (const auto& b : bp) {
    slope += 2.0 * b.w;
    if (slope >= -slack) return b.p;
  }
  return bp.back().p;
}

// Minimiser of sum w |x - p| + b (x - d)^2 over sorted, merged breakpoints.
double pwlq_scan(const std::vector<Breakpoint>& bp, double b, double d) {
  double slope = 0.0;
  for (const auto& k : bp) slope -= k.w;
  double left = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= bp.size(); ++i) {
    const double right = i < bp.size() ? bp[i].p : std::numeric_limits<double>::infinity();
    const double stationary = d - slope / (2.0 * b);
    if (stationary <= right) return std::max(left, stationary);
    if (i < bp.size()) {
      slope += 2.0 * bp[i].w;
      left = right;
    }
  }
  return left;  // unreachable: the last interval is unbounded
}

// Column-major residual X - W^T H for cache-friendly column scans.
Eigen::MatrixXd residual_of(const Matrix& X, const Matrix& W, const Matrix& H) {
  Eigen::MatrixXd R = X;
  R.noalias() -= W.transpose() * H;
  return R;
}

// One pass over the rows of H. Returns nothing; H and R are updated in place.
void rri_sweep(const Matrix& W, Matrix& H, Eigen::MatrixXd& R, bool box,
               std::vector<Breakpoint>& bp) {
  const Index m = W.cols();
  const Index n = H.cols();
  std::vector<Index> support;
  support.reserve(static_cast<std::size_t>(m));
  for (Index l = 0; l < W.rows(); ++l) {
    support.clear();
    double total = 0.0;
    for (Index i = 0; i < m; ++i) {
      if (W(l, i) > 0.0) {
        support.push_back(i);
        total += W(l, i);
      }
    }
    if (support.empty()) continue;  // undefined coordinate: keep H(l, :)
    for (Index j = 0; j < n; ++j) {
      const double old = H(l, j);
      bp.clear();
      for (Index i : support) {
        const double w = W(l, i);
        bp.push_back({(R(i, j) + w * old) / w, w});
      }
      double h = std::max(0.0, leftmost_median(bp, total));
      if (box) h = std::min(h, 1.0);
      if (h != old) {
        const double delta = old - h;
        for (Index i : support) R(i, j) += W(l, i) * delta;
        H(l, j) = h;
      }
    }
  }
}

void check_similarity(const Matrix& S, Index n) {
  if (S.rows() != n || S.cols() != n) {
    fail(ErrorCode::kDimension, "similarity must be n x n");
  }
  for (Index a = 0; a < n; ++a) {
    if (S(a, a) != 0.0) fail(ErrorCode::kDomain, "similarity must have a zero diagonal");
    for (Index j = 0; j < n; ++j) {
      if (!(S(a, j) >= 0.0)) fail(ErrorCode::kDomain, "similarity must be non-negative");
      if (S(a, j) != S(j, a)) fail(ErrorCode::kDomain, "similarity must be symmetric");
    }
  }
}

void manifold_sweep(const Matrix& W, Matrix& H, Eigen::MatrixXd& R, double beta, const Matrix& S,
                    const Vector& degree, std::vector<Breakpoint>& bp) {
  const Index m = W.cols();
  const Index n = H.cols();
  for (Index l = 0; l < W.rows(); ++l) {
    double total = 0.0;
    for (Index i = 0; i < m; ++i) total += std::max(W(l, i), 0.0);
    for (Index j = 0; j < n; ++j) {
      const double old = H(l, j);
      bp.clear();
      for (Index i = 0; i < m; ++i) {
        const double w = W(l, i);
        if (w > 0.0) bp.push_back({(R(i, j) + w * old) / w, w});
      }
      const double b = 0.5 * beta * degree(j);
      double h;
      if (b > 0.0) {
        double pull = 0.0;
        for (Index a = 0; a < n; ++a) {
          if (a != j) pull += S(a, j) * H(l, a);
        }
        sort_and_merge(bp);
        h = std::max(0.0, pwlq_scan(bp, b, pull / degree(j)));
      } else if (!bp.empty()) {
        h = std::max(0.0, leftmost_median(bp, total));
      } else {
        continue;
      }
      if (h != old) {
        const double delta = old - h;
        for (Index i = 0; i < m; ++i) R(i, j) += W(l, i) * delta;
        H(l, j) = h;
      }
    }
  }
}

Vector similarity_degree(const Matrix& S) { return S.colwise().sum().transpose(); }

Matrix similarity_from_laplacian(const Matrix& L) {
  Matrix S = -L;
  S.diagonal().setZero();
  if (S.size() > 0 && S.minCoeff() < 0.0) {
    fail(ErrorCode::kConfiguration, "Laplacian off-diagonal entries must be non-positive");
  }
  return S;
}

}  // namespace

std::optional<double> weighted_l1_min(const Vector& weights, const Vector& targets) {
  if (weights.size() != targets.size()) {
    fail(ErrorCode::kDimension, "weighted_l1_min: weights and targets differ in length");
  }
  std::vector<Breakpoint> bp;
  double total = 0.0;
  for (Index i = 0; i < weights.size(); ++i) {
    const double w = weights(i);
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::kDomain, "weights must be non-negative");
    if (!std::isfinite(targets(i))) fail(ErrorCode::kDomain, "targets must be finite");
    if (w == 0.0) continue;
    bp.push_back({targets(i) / w, w});
    total += w;
  }
  if (bp.empty()) return std::nullopt;
  return std::max(0.0, leftmost_median(bp, total));
}

double pwl_plus_quadratic_min(const Vector& a, const Vector& x_breaks, double b, double d) {
  if (!(b > 0.0)) fail(ErrorCode::kDomain, "quadratic coefficient must be positive");
  if (a.size() != x_breaks.size()) {
    fail(ErrorCode::kDimension, "pwl_plus_quadratic_min: weights and breakpoints differ in length");
  }
  std::vector<Breakpoint> bp;
  for (Index i = 0; i < a.size(); ++i) {
    if (!(a(i) > 0.0)) fail(ErrorCode::kDomain, "breakpoint weights must be positive");
    if (i > 0 && x_breaks(i) < x_breaks(i - 1)) {
      fail(ErrorCode::kDomain, "breakpoints must be sorted ascending");
    }
    if (!bp.empty() && bp.back().p == x_breaks(i)) {
      bp.back().w += a(i);
    } else {
      bp.push_back({x_breaks(i), a(i)});
    }
  }
  return pwlq_scan(bp, b, d);
}

Matrix rri_update_H(const Matrix& X, const Matrix& W, const Matrix& H,
                    const RriOptions& options, int* sweeps) {
  require_composable(X, W, H);
  if (!is_nonnegative(H)) fail(ErrorCode::kDomain, "rri_update_H: H must be non-negative");
  if (options.max_sweeps < 1) fail(ErrorCode::kConfiguration, "max_sweeps must be at least 1");

  Matrix out = H;
  Eigen::MatrixXd R = residual_of(X, W, out);
  std::vector<Breakpoint> bp;
  bp.reserve(static_cast<std::size_t>(X.rows()));
  double previous = R.cwiseAbs().sum();
  int done = 0;
  while (done < options.max_sweeps) {
    rri_sweep(W, out, R, options.box, bp);
    ++done;
    const double current = R.cwiseAbs().sum();
    if (!std::isfinite(current)) throw NumericalFailure(done, "non-finite residual in RRI sweep");
    const bool settled = std::abs(previous - current) <= options.tol;
    previous = current;
    if (settled) break;
  }
  if (sweeps) *sweeps = done;
  return out;
}

Matrix rri_box_update(const Matrix& X, const Matrix& W, const Matrix& H) {
  require_composable(X, W, H);
  if (X.size() > 0 && (X.minCoeff() < 0.0 || X.maxCoeff() > 1.0)) {
    fail(ErrorCode::kDomain, "rri_box_update: X must lie in [0, 1]");
  }
  Matrix out = clamp_box(H);
  Eigen::MatrixXd R = residual_of(X, W, out);
  std::vector<Breakpoint> bp;
  rri_sweep(W, out, R, true, bp);
  return out;
}

Matrix rri_manifold_update(const Matrix& X, const Matrix& W, const Matrix& H, double beta,
                           const Matrix& similarity) {
  require_composable(X, W, H);
  if (!(beta >= 0.0)) fail(ErrorCode::kDomain, "beta must be non-negative");
  check_similarity(similarity, X.cols());
  Matrix out = H;
  Eigen::MatrixXd R = residual_of(X, W, out);
  std::vector<Breakpoint> bp;
  manifold_sweep(W, out, R, beta, similarity, similarity_degree(similarity), bp);
  return out;
}

SolveResult rri_solve(const Matrix& X, const SolverConfig& cfg,
                      const std::optional<FactorPair>& init, const OuterObserver& observer) {
  detail::Stopwatch clock;
  detail::PreparedRun run = detail::prepare_run(X, cfg, init);
  FactorPair& F = run.F;
  const Matrix Xt = X.transpose();
  const bool box = cfg.variant == VariantKind::kBox;
  const bool manifold = cfg.variant == VariantKind::kManifold && cfg.beta > 0.0;
  Matrix S;
  Vector degree;
  if (manifold) {
    S = similarity_from_laplacian(cfg.laplacian);
    degree = similarity_degree(S);
  }

  SolveResult out;
  double previous = variant_objective(X, F, cfg);
  out.trace.initial_objective = previous;
  std::vector<Breakpoint> bp;
  for (int t = 0; t < cfg.max_outer; ++t) {
    // Sweeps stop once the gain falls under the fixed tolerance, or under a
    // 1e-6 fraction of the current objective for the adaptive rule.
    auto tolerance = [&](double value) {
      return cfg.inner_tol_rule == InnerTolRule::kFixed ? cfg.inner_tol
                                                        : std::max(kRriMinTol, 1e-6 * value);
    };

    int inner_h = 0;
    if (manifold) {
      Eigen::MatrixXd R = residual_of(X, F.W, F.H);
      double before = variant_objective(X, F, cfg);
      while (inner_h < cfg.max_inner) {
        manifold_sweep(F.W, F.H, R, cfg.beta, S, degree, bp);
        ++inner_h;
        const double after = variant_objective(X, F, cfg);
        if (!std::isfinite(after)) throw NumericalFailure(t, "non-finite objective");
        const bool settled = std::abs(before - after) <= tolerance(before);
        before = after;
        if (settled) break;
      }
    } else {
      RriOptions opts{tolerance(previous), cfg.max_inner, box};
      F.H = rri_update_H(X, F.W, F.H, opts, &inner_h);
    }

    int inner_w = 0;
    RriOptions opts{tolerance(variant_objective(X, F, cfg)), cfg.max_inner, box};
    Matrix W = rri_update_H(Xt, F.H, F.W, opts, &inner_w);
    F.W = std::move(W);

    const double current = variant_objective(X, F, cfg);
    if (!std::isfinite(current)) throw NumericalFailure(t, "non-finite objective");
    TraceRecord rec;
    rec.t = t;
    rec.lambda = 0.0;
    rec.objective = current;
    rec.smoothed_objective = current;
    rec.inner_h = inner_h;
    rec.inner_w = inner_w;
    rec.seconds = cfg.record_timing ? clock.seconds() : 0.0;
    out.trace.records.push_back(rec);
    if (observer) observer(rec, F);

    if (std::abs(previous - current) <= cfg.outer_tol) {
      out.converged = true;
      break;
    }
    previous = current;
  }
  if (!out.converged) {
    out.warnings.push_back("outer iteration limit reached before the objective settled");
  }
  out.factors = std::move(F);
  return out;
}

double sym_coordinate_min(const Vector& z, const Vector& h, Index j) {
  if (z.size() != h.size() || j < 0 || j >= z.size()) {
    fail(ErrorCode::kDimension, "sym_coordinate_min: bad sizes");
  }
  std::vector<Breakpoint> bp;
  for (Index i = 0; i < z.size(); ++i) {
    if (i != j && h(i) > 0.0) bp.push_back({z(i) / h(i), 2.0 * h(i)});
  }
  sort_and_merge(bp);

  // Prefix sums give the piecewise-linear part in O(log n) per evaluation.
  std::vector<double> cw(bp.size() + 1, 0.0);
  std::vector<double> cwp(bp.size() + 1, 0.0);
  for (std::size_t k = 0; k < bp.size(); ++k) {
    cw[k + 1] = cw[k] + bp[k].w;
    cwp[k + 1] = cwp[k] + bp[k].w * bp[k].p;
  }
  const double zjj = z(j);
  auto value = [&](double x) {
    const auto it = std::upper_bound(bp.begin(), bp.end(), x,
                                     [](double v, const Breakpoint& b) { return v < b.p; });
    const std::size_t k = static_cast<std::size_t>(it - bp.begin());
    const double left_w = cw[k];
    const double right_w = cw.back() - left_w;
    const double left_wp = cwp[k];
    const double right_wp = cwp.back() - left_wp;
    return std::abs(zjj - x * x) + x * (left_w - right_w) - left_wp + right_wp;
  };

  const double s = std::sqrt(std::max(zjj, 0.0));
  // Above s the objective is convex: pwl + x^2 - z_jj.
  std::vector<double> candidates{std::max(s, pwlq_scan(bp, 1.0, 0.0))};
  // Below s it is concave on every linear piece: minima sit at piece ends.
  if (s > 0.0) {
    candidates.push_back(0.0);
    candidates.push_back(s);
    for (const auto& b : bp) {
      if (b.p > 0.0 && b.p < s) candidates.push_back(b.p);
    }
  }
  double best_x = candidates.front();
  double best_v = value(best_x);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    const double x = candidates[c];
    const double v = value(x);
    if (v < best_v || (v == best_v && x < best_x)) {
      best_v = v;
      best_x = x;
    }
  }
  return best_x;
}

SymResult sym_solve(const Matrix& X, const SolverConfig& cfg, const std::optional<Matrix>& init) {
  detail::Stopwatch clock;
  if (X.size() == 0) fail(ErrorCode::kDimension, "input matrix is empty");
  if (X.rows() != X.cols()) fail(ErrorCode::kDimension, "symmetric input must be square");
  require_nonnegative(X, "X");
  if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-12 * X.maxCoeff()) {
    fail(ErrorCode::kDomain, "symmetric factorisation needs a symmetric input");
  }
  const double peak = X.maxCoeff();
  if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(peak, 1.0)) {
    fail(ErrorCode::kDomain, "sym_solve: X is not symmetric");
  }
  if (cfg.rank < 1) fail(ErrorCode::kConfiguration, "rank must be at least 1");
  if (cfg.max_outer < 1) fail(ErrorCode::kConfiguration, "max_outer must be at least 1");
  if (!(cfg.outer_tol > 0.0)) fail(ErrorCode::kConfiguration, "outer tolerance must be positive");

  const Index n = X.rows();
  const double scale = peak > 0.0 ? peak : 1.0;
  const Eigen::MatrixXd Xs = X / scale;

  Eigen::MatrixXd H(n, cfg.rank);
  if (init) {
    if (init->rows() != n || init->cols() != cfg.rank) {
      fail(ErrorCode::kDimension, "initial H must be n x rank");
    }
    require_nonnegative(*init, "initial H");
    H = *init / std::sqrt(scale);
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < cfg.rank; ++c) H(i, c) = 1.0 - unit(rng);
    }
    const double current = (H * H.transpose()).mean();
    H *= std::sqrt(std::max(Xs.mean(), 0.0) / current);
    H = H.cwiseMax(kInitFloor);
  }

  SymResult out;
  Eigen::MatrixXd R = Xs - H * H.transpose();
  double previous = R.cwiseAbs().sum() * scale;
  out.trace.initial_objective = previous;
  Eigen::VectorXd h(n);
  for (int t = 0; t < cfg.max_outer; ++t) {
    for (Index c = 0; c < cfg.rank; ++c) {
      h = H.col(c);
      R.noalias() += h * h.transpose();  // residual without component c
      for (Index j = 0; j < n; ++j) {
        h(j) = sym_coordinate_min(R.col(j), h, j);
      }
      H.col(c) = h;
      R.noalias() -= h * h.transpose();
    }
    const double current = R.cwiseAbs().sum() * scale;
    if (!std::isfinite(current)) throw NumericalFailure(t, "non-finite objective");
    TraceRecord rec;
    rec.t = t;
    rec.objective = current;
    rec.smoothed_objective = current;
    rec.inner_h = 1;
    rec.seconds = cfg.record_timing ? clock.seconds() : 0.0;
    out.trace.records.push_back(rec);
    if (std::abs(previous - current) <= cfg.outer_tol) {
      out.converged = true;
      break;
    }
    previous = current;
  }
  out.H = H * std::sqrt(scale);
  return out;
}

}  // namespace mahnmf
