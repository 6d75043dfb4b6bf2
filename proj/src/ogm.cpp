#include "mahnmf/ogm.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "solver_internal.hpp"

namespace mahnmf {

namespace {

struct Point {
  double smoothed = 0.0;
  double exact = 0.0;
  Matrix grad;
  SmoothedEvaluation ev;  ///< residual and dual; storage is reused
};

double largest_gram_eigenvalue(const Matrix& W) {
  if (W.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = W * W.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

// Smoothed loss plus every hook term, evaluated in one residual pass.
class SubproblemObjective {
 public:
  SubproblemObjective(const Matrix& X, const Matrix& W, const SmoothingState& state,
                      const SubproblemHooks& hooks)
      : X_(X), W_(W), state_(state), hooks_(hooks) {
    lipschitz_ = state.lipschitz;
    if (hooks.alpha > 0.0) lipschitz_ += hooks.alpha * largest_gram_eigenvalue(W);
    if (manifold_active()) lipschitz_ += hooks.beta * hooks.laplacian_norm;
  }

  double lipschitz() const { return lipschitz_; }

  void eval(const Matrix& H, bool want_grad, bool want_dual, Point& p) const {
    SmoothedEvaluation& ev = p.ev;
    evaluate_smoothed_into(X_, W_, H, state_, want_grad || want_dual, ev);
    p.smoothed = ev.smoothed;
    p.exact = ev.exact;
    if (want_grad) p.grad.noalias() = W_ * ev.dual;
    if (hooks_.alpha > 0.0) {
      const double q = 0.5 * hooks_.alpha * ev.residual.squaredNorm();
      p.smoothed += q;
      p.exact += q;
      if (want_grad) p.grad.noalias() += hooks_.alpha * (W_ * ev.residual);
    }
    if (manifold_active()) {
      const Matrix HL = H * (*hooks_.laplacian);
      const double q = 0.5 * hooks_.beta * H.cwiseProduct(HL).sum();
      p.smoothed += q;
      p.exact += q;
      if (want_grad) p.grad += hooks_.beta * HL;
    }
    if (hooks_.groups && hooks_.groups->mode == GroupMode::kPenalized) {
      double q = 0.0;
      for (const auto& g : hooks_.groups->groups) q += group_norm(H, g, hooks_.groups->norm);
      q *= hooks_.groups->weight;
      p.smoothed += q;
      p.exact += q;
    }
  }

 private:
  bool manifold_active() const { return hooks_.beta > 0.0 && hooks_.laplacian != nullptr; }

  const Matrix& X_;
  const Matrix& W_;
  const SmoothingState& state_;
  const SubproblemHooks& hooks_;
  double lipschitz_ = 0.0;
};

// phi(mu) = min_{0 <= H <= 1} <W^T H - X, mu>.
double box_dual_value(const Matrix& X, const Matrix& W, const Matrix& mu) {
  const Matrix Wmu = W * mu;
  return Wmu.cwiseMin(0.0).sum() - X.cwiseProduct(mu).sum();
}

void require_finite(const Point& p, int k) {
  if (!std::isfinite(p.smoothed) || !std::isfinite(p.exact)) {
    throw NumericalFailure(k, "non-finite objective in inner solve");
  }
}

}  // namespace

int monotone_y_choice(double f_prev, double f_current, double f_candidate) {
  int best = 0;
  double value = f_prev;
  if (f_current < value) {
    best = 1;
    value = f_current;
  }
  if (f_candidate < value) best = 2;
  return best;
}

Matrix monotone_y_step(const Matrix& X, const Matrix& W, const Matrix& Y_prev,
                       const Matrix& H_k, const Matrix& Y_candidate,
                       const SmoothingState& state) {
  require_same_shape(Y_prev, H_k, "monotone_y_step");
  require_same_shape(Y_prev, Y_candidate, "monotone_y_step");
  const int pick = monotone_y_choice(smoothed_objective(X, W, Y_prev, state),
                                     smoothed_objective(X, W, H_k, state),
                                     smoothed_objective(X, W, Y_candidate, state));
  return pick == 0 ? Y_prev : (pick == 1 ? H_k : Y_candidate);
}

double inner_tolerance(double lambda_t, double big_d, Index n_cols) {
  return static_cast<double>(n_cols) * big_d * lambda_t / 2.0;
}

SubproblemResult ogm_subproblem(const Matrix& X, const Matrix& W, const Matrix& H0,
                                const SubproblemOptions& options,
                                const SubproblemHooks& hooks) {
  require_composable(X, W, H0);
  if (!is_nonnegative(H0)) fail(ErrorCode::kDomain, "ogm_subproblem: H0 must be non-negative");
  if (!(options.tol > 0.0)) fail(ErrorCode::kConfiguration, "inner tolerance must be positive");
  if (options.max_inner < 1) fail(ErrorCode::kConfiguration, "max_inner must be at least 1");

  const SmoothingState state = SmoothingState::from_basis(W, options.lambda, DegeneratePolicy::kDrop);
  SubproblemObjective objective(X, W, state, hooks);
  const double L = objective.lipschitz();
  const bool gap_stop = options.gap_stop && hooks.box;

  SubproblemResult result;
  Point current;
  Point next;
  Point probe;
  objective.eval(H0, true, gap_stop, current);
  require_finite(current, 0);
  result.H = H0;
  result.smoothed = current.smoothed;
  result.exact = current.exact;
  // A zero basis leaves the objective constant in H.
  if (!(L > 0.0)) {
    result.converged = true;
    return result;
  }
  const double start_smoothed = current.smoothed;

  Matrix H = H0;
  Matrix acc = Matrix::Zero(H0.rows(), H0.cols());
  Matrix y_prev = H0;
  double f_y_prev = current.smoothed;
  Matrix mu_sum;
  double mu_weight = 0.0;
  if (gap_stop) mu_sum = Matrix::Zero(X.rows(), X.cols());

  for (int k = 0; k < options.max_inner; ++k) {
    const double kk = static_cast<double>(k);
    if (gap_stop) {
      mu_sum += (kk + 1.0) * current.ev.dual;
      mu_weight += kk + 1.0;
    }
    acc += (0.5 * (kk + 1.0)) * current.grad;

    Matrix y_point = H - current.grad / L;
    // Prox centre at the warm start; reduces to -acc / L when H0 = 0.
    Matrix z_point = H0 - acc / L;
    Matrix Y;
    Matrix Z;
    if (hooks.groups) {
      GroupSteps steps = ogm_group_steps(y_point, z_point, *hooks.groups,
                                         hooks.radii ? *hooks.radii : std::vector<double>{}, L, k);
      Y = std::move(steps.Y);
      Z = std::move(steps.Z);
    } else if (hooks.box) {
      Y = clamp_box(y_point);
      Z = clamp_box(z_point);
    } else {
      Y = y_point.cwiseMax(0.0);
      Z = z_point.cwiseMax(0.0);
    }
    result.iterations = k + 1;

    // A projected gradient step that does not move certifies optimality.
    if (Y == H) {
      result.converged = true;
      break;
    }

    if (options.monotone_y) {
      objective.eval(Y, false, false, probe);
      require_finite(probe, k);
      const int pick = monotone_y_choice(f_y_prev, current.smoothed, probe.smoothed);
      if (pick == 0) {
        Y = y_prev;
      } else if (pick == 1) {
        Y = H;
        f_y_prev = current.smoothed;
      } else {
        f_y_prev = probe.smoothed;
      }
      y_prev = Y;
    }

    Matrix H_next = (2.0 / (kk + 3.0)) * Z + ((kk + 1.0) / (kk + 3.0)) * Y;
    objective.eval(H_next, true, gap_stop, next);
    require_finite(next, k + 1);

    if (next.smoothed <= start_smoothed && next.exact < result.exact) {
      result.H = H_next;
      result.exact = next.exact;
      result.smoothed = next.smoothed;
    }

    const double change = std::abs(next.smoothed - current.smoothed);
    H = std::move(H_next);
    std::swap(current, next);
    if (change <= options.tol) {
      result.converged = true;
      break;
    }
    if (gap_stop) {
      const double phi = box_dual_value(X, W, mu_sum / mu_weight);
      if (result.exact - phi <= options.tol) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

SolveResult solve_ogm(const Matrix& X, const SolverConfig& cfg,
                      const std::optional<FactorPair>& init, const OuterObserver& observer) {
  detail::Stopwatch clock;
  detail::PreparedRun run = detail::prepare_run(X, cfg, init);
  FactorPair& F = run.F;
  const Matrix Xt = X.transpose();
  const Index m = X.rows();
  const Index n = X.cols();

  SubproblemHooks hooks_h;
  SubproblemHooks hooks_w;
  switch (cfg.variant) {
    case VariantKind::kPlain:
      break;
    case VariantKind::kBox:
      hooks_h.box = hooks_w.box = true;
      break;
    case VariantKind::kManifold:
      hooks_h.beta = cfg.beta;
      hooks_h.laplacian = &cfg.laplacian;
      hooks_h.laplacian_norm = detail::symmetric_norm_bound(cfg.laplacian);
      break;
    case VariantKind::kElastic:
      hooks_h.alpha = hooks_w.alpha = cfg.alpha;
      break;
    case VariantKind::kGroup:
      if (cfg.group_h) {
        hooks_h.groups = &*cfg.group_h;
        hooks_h.radii = &run.radii_h;
      }
      if (cfg.group_w) {
        hooks_w.groups = &*cfg.group_w;
        hooks_w.radii = &run.radii_w;
      }
      break;
  }

  SubproblemOptions opts;
  opts.max_inner = cfg.max_inner;
  opts.monotone_y = cfg.monotone_y;
  opts.gap_stop = cfg.variant == VariantKind::kBox;
  auto tolerance = [&](double lambda, const Matrix& basis, Index cols) {
    if (cfg.inner_tol_rule == InnerTolRule::kFixed) return cfg.inner_tol;
    return std::max(cfg.inner_tol_scale * inner_tolerance(lambda, column_l2_norms(basis).sum(), cols), kMinInnerTol);
  };

  SolveResult out;
  double previous = variant_objective(X, F, cfg);
  out.trace.initial_objective = previous;
  for (int t = 0; t < cfg.max_outer; ++t) {
    const double lambda = cfg.lambda0 / static_cast<double>(t + 1);
    opts.lambda = lambda;

    opts.tol = tolerance(lambda, F.W, n);
    SubproblemResult h_step = ogm_subproblem(X, F.W, F.H, opts, hooks_h);
    F.H = std::move(h_step.H);

    opts.tol = tolerance(lambda, F.H, m);
    Matrix Wt = F.W;
    SubproblemResult w_step = ogm_subproblem(Xt, F.H, Wt, opts, hooks_w);
    F.W = std::move(w_step.H);

    const double current = variant_objective(X, F, cfg);
    if (!std::isfinite(current)) throw NumericalFailure(t, "non-finite objective");
    TraceRecord rec;
    rec.t = t;
    rec.lambda = lambda;
    rec.objective = current;
    {
      // Loss smoothed in the H orientation; regularisers enter unsmoothed.
      const SmoothingState state = SmoothingState::from_basis(F.W, lambda, DegeneratePolicy::kDrop);
      const SmoothedEvaluation ev = evaluate_smoothed(X, F.W, F.H, state, false);
      rec.smoothed_objective = ev.smoothed + (current - ev.exact);
    }
    rec.inner_h = h_step.iterations;
    rec.inner_w = w_step.iterations;
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

}  // namespace mahnmf
