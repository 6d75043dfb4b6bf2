#pragma once

#include <cstdint>
#include <vector>

#include "mahnmf/matrix.hpp"

namespace mahnmf {

struct LowRankPlusSparse {
  Matrix X;  ///< L + S
  Matrix L;  ///< W^T H with uniform [0, 1) factors
  Matrix S;  ///< non-negative spikes
  FactorPair truth;
};

/// Exactly round(density * m * n) entries receive a spike, drawn uniformly in
/// [spike_scale * max(L) / 2, spike_scale * max(L)).
LowRankPlusSparse gen_low_rank_plus_sparse(Index m, Index n, Index r, double density,
                                           std::uint64_t seed, double spike_scale = 1.0);

enum class NoiseKind {
  kOcclusion,   ///< magnitude: block area fraction per column image
  kLaplace,     ///< magnitude: scale; additive, on a `density` fraction of entries
  kSaltPepper,  ///< density: fraction of entries set to min(X) or max(X)
  kGaussian,    ///< magnitude: sigma; additive
  kPoisson,     ///< magnitude: gain g; entries become g * Poisson(x / g)
};

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSaltPepper;
  double magnitude = 0.0;
  double density = 1.0;
  std::uint64_t seed = 0;
  bool clamp_nonneg = true;
  /// Occlusion treats every column as an image_rows x image_cols image
  /// stored row by row.
  Index image_rows = 0;
  Index image_cols = 0;
};

Matrix inject_noise(const Matrix& X, const NoiseSpec& spec);

struct Graph {
  Matrix similarity;
  Matrix laplacian;
};

/// k-nearest-neighbour graph over the columns of X. Edge weights are
/// exp(-d^2 / width^2); width <= 0 selects the median pairwise distance.
/// Symmetrised by taking the larger weight.
Graph knn_laplacian(const Matrix& X, Index k, double width = 0.0);

/// Laplacian diag(S 1) - S of a similarity matrix.
Matrix laplacian_of(const Matrix& similarity);

struct ImageSimilaritySpec {
  double delta_f = 0.3;
  double delta_l = 0.7;
  double cutoff = 0.0;  ///< on normalised spatial distance; <= 0 means median
};

/// Pixel affinity exp(-dF^2/delta_f^2) * exp(-dL^2/delta_l^2) for dL <= cutoff,
/// 0 beyond. dF (brightness gap) and dL (pixel distance) are both scaled to
/// [0, 1] by their maxima. Pixels are numbered row by row.
Matrix image_similarity(const Matrix& brightness, const ImageSimilaritySpec& spec = {});

/// D^{-1/2} A D^{-1/2} with D the row sums; isolated vertices stay zero.
Matrix normalize_similarity(const Matrix& A);

/// Hoyer sparseness of a vector with at least two entries.
double sparseness(const Vector& v);

/// Mean sparseness over the columns (length >= 2) of a factor, skipping
/// all-zero columns.
double mean_column_sparseness(const Matrix& F);

/// ||X - X_hat||_F^2 / ||X||_F^2.
double relative_error(const Matrix& X, const Matrix& X_hat);

struct EucNmfResult {
  FactorPair factors;
  std::vector<double> objective;  ///< ||X - W^T H||_F^2 after each iteration
};

/// Multiplicative updates for min ||X - W^T H||_F^2, seeded like the MahNMF
/// solvers. Stops when the relative decrease drops below tol.
EucNmfResult eucnmf_baseline(const Matrix& X, Index r, int max_iter, double tol,
                             std::uint64_t seed = 0);

inline constexpr double kEucNmfEpsilon = 1e-12;

}  // namespace mahnmf
