/*
 * C interface to the MahNMF library: Manhattan-distance non-negative matrix
 * factorisation X ~= W^T H (X: m x n, W: r x m, H: r x n).
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a mahnmf_status;
 * mahnmf_last_error() describes the most recent failure on the calling
 * thread. Matrices are dense, row-major, double precision.
 */
#ifndef MAHNMF_MAHNMF_H
#define MAHNMF_MAHNMF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MAHNMF_BUILDING)
#    define MAHNMF_API __declspec(dllexport)
#  else
#    define MAHNMF_API __declspec(dllimport)
#  endif
#else
#  define MAHNMF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mahnmf_status {
  MAHNMF_OK = 0,
  MAHNMF_ERR_DIMENSION = 1,
  MAHNMF_ERR_DOMAIN = 2,
  MAHNMF_ERR_DEGENERATE_BASIS = 3,
  MAHNMF_ERR_NUMERICAL = 4,
  MAHNMF_ERR_CONFIG = 5,
  MAHNMF_ERR_IO = 6,
  MAHNMF_ERR_UNDEFINED = 7,
  MAHNMF_ERR_INVALID_ARGUMENT = 8, /* null handle or pointer */
  MAHNMF_ERR_INTERNAL = 9
} mahnmf_status;

typedef struct mahnmf_matrix mahnmf_matrix;
typedef struct mahnmf_config mahnmf_config;
typedef struct mahnmf_result mahnmf_result;

MAHNMF_API const char* mahnmf_version(void);
MAHNMF_API const char* mahnmf_last_error(void);
MAHNMF_API const char* mahnmf_status_string(mahnmf_status status);

/* ---- matrices ---------------------------------------------------------- */

/* Zero-filled rows x cols matrix. */
MAHNMF_API mahnmf_status mahnmf_matrix_create(size_t rows, size_t cols, mahnmf_matrix** out);
/* Copies rows * cols row-major values. */
MAHNMF_API mahnmf_status mahnmf_matrix_from_data(size_t rows, size_t cols, const double* data,
                                                 mahnmf_matrix** out);
MAHNMF_API mahnmf_status mahnmf_matrix_copy(const mahnmf_matrix* A, mahnmf_matrix** out);
MAHNMF_API void mahnmf_matrix_free(mahnmf_matrix* A);
MAHNMF_API size_t mahnmf_matrix_rows(const mahnmf_matrix* A);
MAHNMF_API size_t mahnmf_matrix_cols(const mahnmf_matrix* A);
/* Row-major storage, valid until the matrix is freed. */
MAHNMF_API double* mahnmf_matrix_data(mahnmf_matrix* A);
MAHNMF_API const double* mahnmf_matrix_cdata(const mahnmf_matrix* A);
MAHNMF_API mahnmf_status mahnmf_matrix_transpose(const mahnmf_matrix* A, mahnmf_matrix** out);

/* ".mtx" selects MatrixMarket, any other extension header-less CSV. */
MAHNMF_API mahnmf_status mahnmf_matrix_read(const char* path, mahnmf_matrix** out);
MAHNMF_API mahnmf_status mahnmf_matrix_write(const char* path, const mahnmf_matrix* A);

/* W^T H. */
MAHNMF_API mahnmf_status mahnmf_reconstruct(const mahnmf_matrix* W, const mahnmf_matrix* H,
                                            mahnmf_matrix** out);
/* A - B. */
MAHNMF_API mahnmf_status mahnmf_matrix_subtract(const mahnmf_matrix* A, const mahnmf_matrix* B,
                                                mahnmf_matrix** out);
/* A B (ordinary product). */
MAHNMF_API mahnmf_status mahnmf_matrix_multiply(const mahnmf_matrix* A, const mahnmf_matrix* B,
                                                mahnmf_matrix** out);

/* ---- metrics ----------------------------------------------------------- */

MAHNMF_API mahnmf_status mahnmf_manhattan(const mahnmf_matrix* A, const mahnmf_matrix* B,
                                          double* out);
/* ||X - W^T H||_M */
MAHNMF_API mahnmf_status mahnmf_objective(const mahnmf_matrix* X, const mahnmf_matrix* W,
                                          const mahnmf_matrix* H, double* out);
/* ||X - X_hat||_F^2 / ||X||_F^2 */
MAHNMF_API mahnmf_status mahnmf_relative_error(const mahnmf_matrix* X, const mahnmf_matrix* X_hat,
                                               double* out);
MAHNMF_API mahnmf_status mahnmf_sparseness(const double* v, size_t len, double* out);
/* Mean Hoyer sparseness over the non-zero columns of F. */
MAHNMF_API mahnmf_status mahnmf_mean_column_sparseness(const mahnmf_matrix* F, double* out);

/* ---- solver configuration --------------------------------------------- */

typedef enum mahnmf_solver { MAHNMF_SOLVER_OGM = 0, MAHNMF_SOLVER_RRI = 1 } mahnmf_solver;

typedef enum mahnmf_variant {
  MAHNMF_VARIANT_PLAIN = 0,
  MAHNMF_VARIANT_BOX = 1,
  MAHNMF_VARIANT_MANIFOLD = 2,
  MAHNMF_VARIANT_ELASTIC = 3,
  MAHNMF_VARIANT_GROUP = 4
} mahnmf_variant;

typedef enum mahnmf_group_target { MAHNMF_GROUP_W = 0, MAHNMF_GROUP_H = 1 } mahnmf_group_target;
typedef enum mahnmf_group_norm { MAHNMF_NORM_L2 = 0, MAHNMF_NORM_INF = 1 } mahnmf_group_norm;
typedef enum mahnmf_group_mode {
  MAHNMF_GROUP_CONSTRAINED = 0,
  MAHNMF_GROUP_PENALIZED = 1
} mahnmf_group_mode;

/* Defaults: rank 1, OGM, plain, lambda0 0.1, outer tol 0.1, adaptive inner
 * tolerance (scale 1e-3), 100 outer and 500 inner iterations, seed 0. */
MAHNMF_API mahnmf_status mahnmf_config_create(mahnmf_config** out);
MAHNMF_API void mahnmf_config_free(mahnmf_config* cfg);
MAHNMF_API mahnmf_status mahnmf_config_set_rank(mahnmf_config* cfg, size_t rank);
MAHNMF_API mahnmf_status mahnmf_config_set_solver(mahnmf_config* cfg, mahnmf_solver solver);
MAHNMF_API mahnmf_status mahnmf_config_set_lambda0(mahnmf_config* cfg, double lambda0);
MAHNMF_API mahnmf_status mahnmf_config_set_outer_tol(mahnmf_config* cfg, double tol);
/* tol > 0: fixed inner tolerance. */
MAHNMF_API mahnmf_status mahnmf_config_set_inner_tol_fixed(mahnmf_config* cfg, double tol);
/* scale in (0, 1]: adaptive rule scale * n * D * lambda_t / 2. */
MAHNMF_API mahnmf_status mahnmf_config_set_inner_tol_adaptive(mahnmf_config* cfg, double scale);
MAHNMF_API mahnmf_status mahnmf_config_set_max_outer(mahnmf_config* cfg, int max_outer);
MAHNMF_API mahnmf_status mahnmf_config_set_max_inner(mahnmf_config* cfg, int max_inner);
MAHNMF_API mahnmf_status mahnmf_config_set_seed(mahnmf_config* cfg, uint64_t seed);
MAHNMF_API mahnmf_status mahnmf_config_set_monotone_y(mahnmf_config* cfg, int enabled);
/* enabled = 0 reports zero seconds in traces (byte-reproducible output). */
MAHNMF_API mahnmf_status mahnmf_config_set_record_timing(mahnmf_config* cfg, int enabled);

MAHNMF_API mahnmf_status mahnmf_config_set_plain(mahnmf_config* cfg);
MAHNMF_API mahnmf_status mahnmf_config_set_box(mahnmf_config* cfg);
/* laplacian: n x n graph Laplacian over the columns of X (copied). */
MAHNMF_API mahnmf_status mahnmf_config_set_manifold(mahnmf_config* cfg, double beta,
                                                    const mahnmf_matrix* laplacian);
MAHNMF_API mahnmf_status mahnmf_config_set_elastic(mahnmf_config* cfg, double alpha);
/* Adds group sparsity on the columns of W or H and selects the group variant.
 * Groups are half-open index ranges [starts[g], ends[g]). In constrained mode
 * `value` is the radius for every group, or <= 0 to use radius_fraction of
 * each group's initial norm; in penalized mode `value` is the weight. */
MAHNMF_API mahnmf_status mahnmf_config_add_groups(mahnmf_config* cfg, mahnmf_group_target target,
                                                  mahnmf_group_norm norm, mahnmf_group_mode mode,
                                                  double value, double radius_fraction,
                                                  const size_t* starts, const size_t* ends,
                                                  size_t num_groups);

/* ---- solving ----------------------------------------------------------- */

typedef struct mahnmf_trace_record {
  int t;
  double lambda;
  double objective;
  double smoothed_objective;
  int inner_h;
  int inner_w;
  double seconds;
} mahnmf_trace_record;

/* Called after every outer iteration; W (r x m) and H (r x n) are row-major
 * views valid only during the call. */
typedef void (*mahnmf_observer)(const mahnmf_trace_record* record, const double* W,
                                const double* H, size_t rank, size_t m, size_t n, void* user);

/* W0/H0 may both be NULL (seeded initialisation) or both set. */
MAHNMF_API mahnmf_status mahnmf_solve(const mahnmf_matrix* X, const mahnmf_config* cfg,
                                      const mahnmf_matrix* W0, const mahnmf_matrix* H0,
                                      mahnmf_result** out);
MAHNMF_API mahnmf_status mahnmf_solve_observed(const mahnmf_matrix* X, const mahnmf_config* cfg,
                                               const mahnmf_matrix* W0, const mahnmf_matrix* H0,
                                               mahnmf_observer observer, void* user,
                                               mahnmf_result** out);
MAHNMF_API void mahnmf_result_free(mahnmf_result* result);
/* Borrowed views owned by the result. */
MAHNMF_API const mahnmf_matrix* mahnmf_result_W(const mahnmf_result* result);
MAHNMF_API const mahnmf_matrix* mahnmf_result_H(const mahnmf_result* result);
MAHNMF_API int mahnmf_result_converged(const mahnmf_result* result);
MAHNMF_API double mahnmf_result_initial_objective(const mahnmf_result* result);
MAHNMF_API size_t mahnmf_result_trace_length(const mahnmf_result* result);
MAHNMF_API mahnmf_status mahnmf_result_trace_record(const mahnmf_result* result, size_t index,
                                                    mahnmf_trace_record* out);
/* CSV with header t,lambda,objective,smoothed_objective,inner_h,inner_w,seconds. */
MAHNMF_API mahnmf_status mahnmf_result_write_trace(const mahnmf_result* result, const char* path);
MAHNMF_API size_t mahnmf_result_warning_count(const mahnmf_result* result);
MAHNMF_API const char* mahnmf_result_warning(const mahnmf_result* result, size_t index);

/* Seeded default initialisation: W (rank x m), H (rank x n). */
MAHNMF_API mahnmf_status mahnmf_initialize(const mahnmf_matrix* X, size_t rank, uint64_t seed,
                                           mahnmf_matrix** W, mahnmf_matrix** H);

/* min_{H >= 0} ||X - H H^T||_M; uses rank, seed, outer_tol, max_outer of cfg.
 * H_out is n x rank. The trace, if requested, is written as CSV. */
MAHNMF_API mahnmf_status mahnmf_sym_solve(const mahnmf_matrix* X, const mahnmf_config* cfg,
                                          mahnmf_matrix** H_out, const char* trace_path);

/* Euclidean NMF baseline (multiplicative updates). */
MAHNMF_API mahnmf_status mahnmf_eucnmf(const mahnmf_matrix* X, size_t rank, int max_iter,
                                       double tol, uint64_t seed, mahnmf_matrix** W,
                                       mahnmf_matrix** H);

/* ---- data generation and graphs --------------------------------------- */

/* X = L + S with L = W^T H rank r and non-negative spikes S. */
MAHNMF_API mahnmf_status mahnmf_synth_low_rank_plus_sparse(size_t m, size_t n, size_t rank,
                                                           double density, uint64_t seed,
                                                           double spike_scale,
                                                           mahnmf_matrix** X, mahnmf_matrix** L,
                                                           mahnmf_matrix** S);

typedef enum mahnmf_noise_kind {
  MAHNMF_NOISE_OCCLUSION = 0,
  MAHNMF_NOISE_LAPLACE = 1,
  MAHNMF_NOISE_SALT_PEPPER = 2,
  MAHNMF_NOISE_GAUSSIAN = 3,
  MAHNMF_NOISE_POISSON = 4
} mahnmf_noise_kind;

typedef struct mahnmf_noise_spec {
  mahnmf_noise_kind kind;
  double magnitude; /* occlusion area fraction, Laplace scale, Gaussian sigma, Poisson gain */
  double density;   /* salt & pepper density; fraction of entries hit by Laplace noise */
  uint64_t seed;
  int clamp_nonneg;
  size_t image_rows; /* occlusion only */
  size_t image_cols;
} mahnmf_noise_spec;

MAHNMF_API mahnmf_noise_spec mahnmf_noise_spec_default(mahnmf_noise_kind kind);
MAHNMF_API mahnmf_status mahnmf_inject_noise(const mahnmf_matrix* X, const mahnmf_noise_spec* spec,
                                             mahnmf_matrix** out);

/* kNN graph over the columns of X; width <= 0 picks the median distance. */
MAHNMF_API mahnmf_status mahnmf_knn_graph(const mahnmf_matrix* X, size_t k, double width,
                                          mahnmf_matrix** similarity, mahnmf_matrix** laplacian);
MAHNMF_API mahnmf_status mahnmf_laplacian(const mahnmf_matrix* similarity, mahnmf_matrix** out);
/* cutoff <= 0 selects the median normalised pixel distance. */
MAHNMF_API mahnmf_status mahnmf_image_similarity(const mahnmf_matrix* brightness, double delta_f,
                                                 double delta_l, double cutoff,
                                                 mahnmf_matrix** out);
MAHNMF_API mahnmf_status mahnmf_normalize_similarity(const mahnmf_matrix* A, mahnmf_matrix** out);

/* rows x cols entries uniform in [0, 1). */
MAHNMF_API mahnmf_status mahnmf_random_uniform(size_t rows, size_t cols, uint64_t seed,
                                               mahnmf_matrix** out);

#ifdef __cplusplus
}
#endif

#endif /* MAHNMF_MAHNMF_H */
