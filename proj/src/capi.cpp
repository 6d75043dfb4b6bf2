#include "mahnmf/mahnmf.h"

#include <fstream>
#include <limits>
#include <new>
#include <random>
#include <string>
#include <utility>

#include "mahnmf/harness.hpp"
#include "mahnmf/io.hpp"
#include "mahnmf/rri.hpp"
#include "mahnmf/solver.hpp"

struct mahnmf_matrix {
  mahnmf::Matrix value;
};

struct mahnmf_config {
  mahnmf::SolverConfig value;
};

struct mahnmf_result {
  mahnmf::SolveResult value;
  mahnmf_matrix W;
  mahnmf_matrix H;
};

namespace {

using mahnmf::ErrorCode;
using mahnmf::Index;
using mahnmf::Matrix;

thread_local std::string last_error;

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

mahnmf_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return MAHNMF_ERR_DIMENSION;
    case ErrorCode::kDomain: return MAHNMF_ERR_DOMAIN;
    case ErrorCode::kDegenerateBasis: return MAHNMF_ERR_DEGENERATE_BASIS;
    case ErrorCode::kNumericalFailure: return MAHNMF_ERR_NUMERICAL;
    case ErrorCode::kConfiguration: return MAHNMF_ERR_CONFIG;
    case ErrorCode::kIo: return MAHNMF_ERR_IO;
    case ErrorCode::kUndefined: return MAHNMF_ERR_UNDEFINED;
  }
  return MAHNMF_ERR_INTERNAL;
}

// Runs body, translating exceptions into status codes and the error message.
template <typename Body>
mahnmf_status guarded(Body&& body) {
  try {
    body();
    last_error.clear();
    return MAHNMF_OK;
  } catch (const mahnmf::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const InvalidArgument& e) {
    last_error = e.what();
    return MAHNMF_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MAHNMF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MAHNMF_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return MAHNMF_ERR_INTERNAL;
  }
}

template <typename T>
T& need(T* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " must not be null");
  return *p;
}

const char* need_path(const char* p) {
  if (!p) throw InvalidArgument("path must not be null");
  return p;
}

Index to_index(size_t v, const char* what) {
  if (v > static_cast<size_t>(std::numeric_limits<Index>::max())) {
    mahnmf::fail(ErrorCode::kDimension, std::string(what) + " is too large");
  }
  return static_cast<Index>(v);
}

mahnmf_matrix* wrap(Matrix m) { return new mahnmf_matrix{std::move(m)}; }

void put(mahnmf_matrix** out, Matrix m) {
  mahnmf_matrix*& slot = need(out, "output");
  slot = wrap(std::move(m));
}

}  // namespace

extern "C" {

const char* mahnmf_version(void) { return "0.1.0"; }

const char* mahnmf_last_error(void) { return last_error.c_str(); }

const char* mahnmf_status_string(mahnmf_status status) {
  switch (status) {
    case MAHNMF_OK: return "ok";
    case MAHNMF_ERR_DIMENSION: return "dimension mismatch";
    case MAHNMF_ERR_DOMAIN: return "domain error";
    case MAHNMF_ERR_DEGENERATE_BASIS: return "degenerate basis";
    case MAHNMF_ERR_NUMERICAL: return "numerical failure";
    case MAHNMF_ERR_CONFIG: return "configuration error";
    case MAHNMF_ERR_IO: return "i/o error";
    case MAHNMF_ERR_UNDEFINED: return "undefined value";
    case MAHNMF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MAHNMF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

mahnmf_status mahnmf_matrix_create(size_t rows, size_t cols, mahnmf_matrix** out) {
  return guarded([&] {
    put(out, Matrix::Zero(to_index(rows, "rows"), to_index(cols, "cols")));
  });
}

mahnmf_status mahnmf_matrix_from_data(size_t rows, size_t cols, const double* data,
                                      mahnmf_matrix** out) {
  return guarded([&] {
    const Index r = to_index(rows, "rows");
    const Index c = to_index(cols, "cols");
    if (r * c > 0) need(data, "data");
    Matrix m(r, c);
    for (Index i = 0; i < r * c; ++i) m.data()[i] = data[i];
    put(out, std::move(m));
  });
}

mahnmf_status mahnmf_matrix_copy(const mahnmf_matrix* A, mahnmf_matrix** out) {
  return guarded([&] { put(out, need(A, "A").value); });
}

void mahnmf_matrix_free(mahnmf_matrix* A) { delete A; }

size_t mahnmf_matrix_rows(const mahnmf_matrix* A) {
  return A ? static_cast<size_t>(A->value.rows()) : 0;
}

size_t mahnmf_matrix_cols(const mahnmf_matrix* A) {
  return A ? static_cast<size_t>(A->value.cols()) : 0;
}

double* mahnmf_matrix_data(mahnmf_matrix* A) { return A ? A->value.data() : nullptr; }

const double* mahnmf_matrix_cdata(const mahnmf_matrix* A) { return A ? A->value.data() : nullptr; }

mahnmf_status mahnmf_matrix_transpose(const mahnmf_matrix* A, mahnmf_matrix** out) {
  return guarded([&] { put(out, need(A, "A").value.transpose()); });
}

mahnmf_status mahnmf_matrix_read(const char* path, mahnmf_matrix** out) {
  return guarded([&] { put(out, mahnmf::io::read_matrix(need_path(path))); });
}

mahnmf_status mahnmf_matrix_write(const char* path, const mahnmf_matrix* A) {
  return guarded([&] { mahnmf::io::write_matrix(need_path(path), need(A, "A").value); });
}

mahnmf_status mahnmf_reconstruct(const mahnmf_matrix* W, const mahnmf_matrix* H,
                                 mahnmf_matrix** out) {
  return guarded([&] { put(out, mahnmf::reconstruct(need(W, "W").value, need(H, "H").value)); });
}

mahnmf_status mahnmf_matrix_subtract(const mahnmf_matrix* A, const mahnmf_matrix* B,
                                     mahnmf_matrix** out) {
  return guarded([&] {
    mahnmf::require_same_shape(need(A, "A").value, need(B, "B").value, "subtract");
    put(out, A->value - B->value);
  });
}

mahnmf_status mahnmf_matrix_multiply(const mahnmf_matrix* A, const mahnmf_matrix* B,
                                     mahnmf_matrix** out) {
  return guarded([&] {
    if (need(A, "A").value.cols() != need(B, "B").value.rows()) {
      mahnmf::fail(ErrorCode::kDimension, "multiply: inner dimensions differ");
    }
    put(out, A->value * B->value);
  });
}

mahnmf_status mahnmf_manhattan(const mahnmf_matrix* A, const mahnmf_matrix* B, double* out) {
  return guarded([&] {
    need(out, "out") = mahnmf::manhattan_distance(need(A, "A").value, need(B, "B").value);
  });
}

mahnmf_status mahnmf_objective(const mahnmf_matrix* X, const mahnmf_matrix* W,
                               const mahnmf_matrix* H, double* out) {
  return guarded([&] {
    need(out, "out") =
        mahnmf::objective(need(X, "X").value, need(W, "W").value, need(H, "H").value);
  });
}

mahnmf_status mahnmf_relative_error(const mahnmf_matrix* X, const mahnmf_matrix* X_hat,
                                    double* out) {
  return guarded([&] {
    need(out, "out") = mahnmf::relative_error(need(X, "X").value, need(X_hat, "X_hat").value);
  });
}

mahnmf_status mahnmf_sparseness(const double* v, size_t len, double* out) {
  return guarded([&] {
    const Index n = to_index(len, "len");
    if (n > 0) need(v, "v");
    need(out, "out") = mahnmf::sparseness(Eigen::Map<const mahnmf::Vector>(v, n));
  });
}

mahnmf_status mahnmf_mean_column_sparseness(const mahnmf_matrix* F, double* out) {
  return guarded([&] { need(out, "out") = mahnmf::mean_column_sparseness(need(F, "F").value); });
}

mahnmf_status mahnmf_config_create(mahnmf_config** out) {
  return guarded([&] {
    mahnmf_config*& slot = need(out, "output");
    slot = new mahnmf_config{};
  });
}

void mahnmf_config_free(mahnmf_config* cfg) { delete cfg; }

mahnmf_status mahnmf_config_set_rank(mahnmf_config* cfg, size_t rank) {
  return guarded([&] {
    if (rank < 1) mahnmf::fail(ErrorCode::kConfiguration, "rank must be at least 1");
    need(cfg, "cfg").value.rank = to_index(rank, "rank");
  });
}

mahnmf_status mahnmf_config_set_solver(mahnmf_config* cfg, mahnmf_solver solver) {
  return guarded([&] {
    if (solver != MAHNMF_SOLVER_OGM && solver != MAHNMF_SOLVER_RRI) {
      mahnmf::fail(ErrorCode::kConfiguration, "unknown solver");
    }
    need(cfg, "cfg").value.solver =
        solver == MAHNMF_SOLVER_RRI ? mahnmf::SolverKind::kRri : mahnmf::SolverKind::kOgm;
  });
}

mahnmf_status mahnmf_config_set_lambda0(mahnmf_config* cfg, double lambda0) {
  return guarded([&] {
    if (!(lambda0 > 0.0)) mahnmf::fail(ErrorCode::kConfiguration, "lambda0 must be positive");
    need(cfg, "cfg").value.lambda0 = lambda0;
  });
}

mahnmf_status mahnmf_config_set_outer_tol(mahnmf_config* cfg, double tol) {
  return guarded([&] {
    if (!(tol > 0.0)) mahnmf::fail(ErrorCode::kConfiguration, "outer tolerance must be positive");
    need(cfg, "cfg").value.outer_tol = tol;
  });
}

mahnmf_status mahnmf_config_set_inner_tol_fixed(mahnmf_config* cfg, double tol) {
  return guarded([&] {
    if (!(tol > 0.0)) mahnmf::fail(ErrorCode::kConfiguration, "inner tolerance must be positive");
    auto& c = need(cfg, "cfg").value;
    c.inner_tol_rule = mahnmf::InnerTolRule::kFixed;
    c.inner_tol = tol;
  });
}

mahnmf_status mahnmf_config_set_inner_tol_adaptive(mahnmf_config* cfg, double scale) {
  return guarded([&] {
    if (!(scale > 0.0 && scale <= 1.0)) {
      mahnmf::fail(ErrorCode::kConfiguration, "adaptive tolerance scale must be in (0, 1]");
    }
    auto& c = need(cfg, "cfg").value;
    c.inner_tol_rule = mahnmf::InnerTolRule::kAdaptive;
    c.inner_tol_scale = scale;
  });
}

mahnmf_status mahnmf_config_set_max_outer(mahnmf_config* cfg, int max_outer) {
  return guarded([&] {
    if (max_outer < 1) mahnmf::fail(ErrorCode::kConfiguration, "max_outer must be at least 1");
    need(cfg, "cfg").value.max_outer = max_outer;
  });
}

mahnmf_status mahnmf_config_set_max_inner(mahnmf_config* cfg, int max_inner) {
  return guarded([&] {
    if (max_inner < 1) mahnmf::fail(ErrorCode::kConfiguration, "max_inner must be at least 1");
    need(cfg, "cfg").value.max_inner = max_inner;
  });
}

mahnmf_status mahnmf_config_set_seed(mahnmf_config* cfg, uint64_t seed) {
  return guarded([&] { need(cfg, "cfg").value.seed = seed; });
}

mahnmf_status mahnmf_config_set_record_timing(mahnmf_config* cfg, int enabled) {
  return guarded([&] { need(cfg, "cfg").value.record_timing = enabled != 0; });
}

mahnmf_status mahnmf_config_set_monotone_y(mahnmf_config* cfg, int enabled) {
  return guarded([&] { need(cfg, "cfg").value.monotone_y = enabled != 0; });
}

mahnmf_status mahnmf_config_set_plain(mahnmf_config* cfg) {
  return guarded([&] { need(cfg, "cfg").value.variant = mahnmf::VariantKind::kPlain; });
}

mahnmf_status mahnmf_config_set_box(mahnmf_config* cfg) {
  return guarded([&] { need(cfg, "cfg").value.variant = mahnmf::VariantKind::kBox; });
}

mahnmf_status mahnmf_config_set_manifold(mahnmf_config* cfg, double beta,
                                         const mahnmf_matrix* laplacian) {
  return guarded([&] {
    if (!(beta >= 0.0)) mahnmf::fail(ErrorCode::kConfiguration, "beta must be non-negative");
    auto& c = need(cfg, "cfg").value;
    c.laplacian = need(laplacian, "laplacian").value;
    c.beta = beta;
    c.variant = mahnmf::VariantKind::kManifold;
  });
}

mahnmf_status mahnmf_config_set_elastic(mahnmf_config* cfg, double alpha) {
  return guarded([&] {
    if (!(alpha >= 0.0)) mahnmf::fail(ErrorCode::kConfiguration, "alpha must be non-negative");
    auto& c = need(cfg, "cfg").value;
    c.alpha = alpha;
    c.variant = mahnmf::VariantKind::kElastic;
  });
}

mahnmf_status mahnmf_config_add_groups(mahnmf_config* cfg, mahnmf_group_target target,
                                       mahnmf_group_norm norm, mahnmf_group_mode mode,
                                       double value, double radius_fraction,
                                       const size_t* starts, const size_t* ends,
                                       size_t num_groups) {
  return guarded([&] {
    auto& c = need(cfg, "cfg").value;
    if (num_groups == 0) mahnmf::fail(ErrorCode::kConfiguration, "at least one group is required");
    need(starts, "starts");
    need(ends, "ends");
    std::vector<std::pair<Index, Index>> ranges;
    for (size_t g = 0; g < num_groups; ++g) {
      ranges.emplace_back(to_index(starts[g], "start"), to_index(ends[g], "end"));
    }
    mahnmf::GroupStructure gs = mahnmf::GroupStructure::from_ranges(ranges);
    gs.norm = norm == MAHNMF_NORM_INF ? mahnmf::GroupNorm::kInf : mahnmf::GroupNorm::kL2;
    if (mode == MAHNMF_GROUP_PENALIZED) {
      gs.mode = mahnmf::GroupMode::kPenalized;
      gs.weight = value;
    } else {
      gs.mode = mahnmf::GroupMode::kConstrained;
      if (value > 0.0) gs.radii.assign(num_groups, value);
      gs.radius_fraction = radius_fraction;
    }
    if (target == MAHNMF_GROUP_W) {
      c.group_w = std::move(gs);
    } else {
      c.group_h = std::move(gs);
    }
    c.variant = mahnmf::VariantKind::kGroup;
  });
}

mahnmf_status mahnmf_solve_observed(const mahnmf_matrix* X, const mahnmf_config* cfg,
                                    const mahnmf_matrix* W0, const mahnmf_matrix* H0,
                                    mahnmf_observer observer, void* user, mahnmf_result** out) {
  return guarded([&] {
    need(out, "output");
    const auto& x = need(X, "X").value;
    const auto& c = need(cfg, "cfg").value;
    std::optional<mahnmf::FactorPair> init;
    if ((W0 == nullptr) != (H0 == nullptr)) {
      throw InvalidArgument("initial W and H must be given together");
    }
    if (W0) init = mahnmf::FactorPair{W0->value, H0->value};
    mahnmf::OuterObserver hook;
    if (observer) {
      hook = [&](const mahnmf::TraceRecord& r, const mahnmf::FactorPair& F) {
        const mahnmf_trace_record rec{r.t,       r.lambda,  r.objective, r.smoothed_objective,
                                      r.inner_h, r.inner_w, r.seconds};
        observer(&rec, F.W.data(), F.H.data(), static_cast<size_t>(F.W.rows()),
                 static_cast<size_t>(F.W.cols()), static_cast<size_t>(F.H.cols()), user);
      };
    }
    auto* result = new mahnmf_result{mahnmf::solve(x, c, init, hook), {}, {}};
    result->W.value = std::move(result->value.factors.W);
    result->H.value = std::move(result->value.factors.H);
    *out = result;
  });
}

mahnmf_status mahnmf_solve(const mahnmf_matrix* X, const mahnmf_config* cfg,
                           const mahnmf_matrix* W0, const mahnmf_matrix* H0,
                           mahnmf_result** out) {
  return mahnmf_solve_observed(X, cfg, W0, H0, nullptr, nullptr, out);
}

void mahnmf_result_free(mahnmf_result* result) { delete result; }

const mahnmf_matrix* mahnmf_result_W(const mahnmf_result* result) {
  return result ? &result->W : nullptr;
}

const mahnmf_matrix* mahnmf_result_H(const mahnmf_result* result) {
  return result ? &result->H : nullptr;
}

int mahnmf_result_converged(const mahnmf_result* result) {
  return result && result->value.converged ? 1 : 0;
}

double mahnmf_result_initial_objective(const mahnmf_result* result) {
  return result ? result->value.trace.initial_objective : 0.0;
}

size_t mahnmf_result_trace_length(const mahnmf_result* result) {
  return result ? result->value.trace.records.size() : 0;
}

mahnmf_status mahnmf_result_trace_record(const mahnmf_result* result, size_t index,
                                         mahnmf_trace_record* out) {
  return guarded([&] {
    const auto& records = need(result, "result").value.trace.records;
    if (index >= records.size()) throw InvalidArgument("trace index out of range");
    const auto& r = records[index];
    need(out, "out") = mahnmf_trace_record{r.t,       r.lambda,  r.objective, r.smoothed_objective,
                                           r.inner_h, r.inner_w, r.seconds};
  });
}

mahnmf_status mahnmf_result_write_trace(const mahnmf_result* result, const char* path) {
  return guarded([&] {
    const auto& trace = need(result, "result").value.trace;
    std::ofstream f(need_path(path));
    if (!f) mahnmf::fail(ErrorCode::kIo, std::string("cannot open ") + path);
    trace.write_csv(f);
    if (!f) mahnmf::fail(ErrorCode::kIo, std::string("cannot write ") + path);
  });
}

size_t mahnmf_result_warning_count(const mahnmf_result* result) {
  return result ? result->value.warnings.size() : 0;
}

const char* mahnmf_result_warning(const mahnmf_result* result, size_t index) {
  if (!result || index >= result->value.warnings.size()) return nullptr;
  return result->value.warnings[index].c_str();
}

mahnmf_status mahnmf_initialize(const mahnmf_matrix* X, size_t rank, uint64_t seed,
                                mahnmf_matrix** W, mahnmf_matrix** H) {
  return guarded([&] {
    need(W, "W");
    need(H, "H");
    auto F = mahnmf::initialize_factors(need(X, "X").value, to_index(rank, "rank"), seed);
    *W = wrap(std::move(F.W));
    *H = wrap(std::move(F.H));
  });
}

mahnmf_status mahnmf_sym_solve(const mahnmf_matrix* X, const mahnmf_config* cfg,
                               mahnmf_matrix** H_out, const char* trace_path) {
  return guarded([&] {
    need(H_out, "H_out");
    auto result = mahnmf::sym_solve(need(X, "X").value, need(cfg, "cfg").value);
    if (trace_path) {
      std::ofstream f(trace_path);
      if (!f) mahnmf::fail(ErrorCode::kIo, std::string("cannot open ") + trace_path);
      result.trace.write_csv(f);
    }
    *H_out = wrap(std::move(result.H));
  });
}

mahnmf_status mahnmf_eucnmf(const mahnmf_matrix* X, size_t rank, int max_iter, double tol,
                            uint64_t seed, mahnmf_matrix** W, mahnmf_matrix** H) {
  return guarded([&] {
    need(W, "W");
    need(H, "H");
    auto r = mahnmf::eucnmf_baseline(need(X, "X").value, to_index(rank, "rank"), max_iter, tol, seed);
    *W = wrap(std::move(r.factors.W));
    *H = wrap(std::move(r.factors.H));
  });
}

mahnmf_status mahnmf_synth_low_rank_plus_sparse(size_t m, size_t n, size_t rank, double density,
                                                uint64_t seed, double spike_scale,
                                                mahnmf_matrix** X, mahnmf_matrix** L,
                                                mahnmf_matrix** S) {
  return guarded([&] {
    need(X, "X");
    need(L, "L");
    need(S, "S");
    auto d = mahnmf::gen_low_rank_plus_sparse(to_index(m, "m"), to_index(n, "n"),
                                              to_index(rank, "rank"), density, seed, spike_scale);
    *X = wrap(std::move(d.X));
    *L = wrap(std::move(d.L));
    *S = wrap(std::move(d.S));
  });
}

mahnmf_noise_spec mahnmf_noise_spec_default(mahnmf_noise_kind kind) {
  mahnmf_noise_spec spec{};
  spec.kind = kind;
  spec.magnitude = 0.0;
  spec.density = 1.0;
  spec.seed = 0;
  spec.clamp_nonneg = 1;
  return spec;
}

mahnmf_status mahnmf_inject_noise(const mahnmf_matrix* X, const mahnmf_noise_spec* spec,
                                  mahnmf_matrix** out) {
  return guarded([&] {
    const auto& s = need(spec, "spec");
    mahnmf::NoiseSpec ns;
    switch (s.kind) {
      case MAHNMF_NOISE_OCCLUSION: ns.kind = mahnmf::NoiseKind::kOcclusion; break;
      case MAHNMF_NOISE_LAPLACE: ns.kind = mahnmf::NoiseKind::kLaplace; break;
      case MAHNMF_NOISE_SALT_PEPPER: ns.kind = mahnmf::NoiseKind::kSaltPepper; break;
      case MAHNMF_NOISE_GAUSSIAN: ns.kind = mahnmf::NoiseKind::kGaussian; break;
      case MAHNMF_NOISE_POISSON: ns.kind = mahnmf::NoiseKind::kPoisson; break;
      default: mahnmf::fail(ErrorCode::kConfiguration, "unknown noise kind");
    }
    ns.magnitude = s.magnitude;
    ns.density = s.density;
    ns.seed = s.seed;
    ns.clamp_nonneg = s.clamp_nonneg != 0;
    ns.image_rows = to_index(s.image_rows, "image_rows");
    ns.image_cols = to_index(s.image_cols, "image_cols");
    put(out, mahnmf::inject_noise(need(X, "X").value, ns));
  });
}

mahnmf_status mahnmf_knn_graph(const mahnmf_matrix* X, size_t k, double width,
                               mahnmf_matrix** similarity, mahnmf_matrix** laplacian) {
  return guarded([&] {
    need(similarity, "similarity");
    need(laplacian, "laplacian");
    auto g = mahnmf::knn_laplacian(need(X, "X").value, to_index(k, "k"), width);
    *similarity = wrap(std::move(g.similarity));
    *laplacian = wrap(std::move(g.laplacian));
  });
}

mahnmf_status mahnmf_laplacian(const mahnmf_matrix* similarity, mahnmf_matrix** out) {
  return guarded([&] { put(out, mahnmf::laplacian_of(need(similarity, "similarity").value)); });
}

mahnmf_status mahnmf_image_similarity(const mahnmf_matrix* brightness, double delta_f,
                                      double delta_l, double cutoff, mahnmf_matrix** out) {
  return guarded([&] {
    put(out, mahnmf::image_similarity(need(brightness, "brightness").value,
                                      mahnmf::ImageSimilaritySpec{delta_f, delta_l, cutoff}));
  });
}

mahnmf_status mahnmf_normalize_similarity(const mahnmf_matrix* A, mahnmf_matrix** out) {
  return guarded([&] { put(out, mahnmf::normalize_similarity(need(A, "A").value)); });
}

mahnmf_status mahnmf_random_uniform(size_t rows, size_t cols, uint64_t seed, mahnmf_matrix** out) {
  return guarded([&] {
    Matrix m(to_index(rows, "rows"), to_index(cols, "cols"));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = unit(rng);
    put(out, std::move(m));
  });
}

}  // extern "C"
