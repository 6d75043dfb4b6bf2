#include "mahnmf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mahnmf/solver.hpp"

namespace mahnmf {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p < 1.0)) fail(ErrorCode::kConfiguration, std::string(what) + " must be in [0, 1)");
}

}  // namespace

LowRankPlusSparse gen_low_rank_plus_sparse(Index m, Index n, Index r, double density,
                                           std::uint64_t seed, double spike_scale) {
  if (m < 1 || n < 1) fail(ErrorCode::kDimension, "matrix dimensions must be positive");
  if (r < 1 || r > std::min(m, n)) fail(ErrorCode::kConfiguration, "rank must be in [1, min(m, n)]");
  require_probability(density, "spike density");
  if (!(spike_scale > 0.0)) fail(ErrorCode::kConfiguration, "spike scale must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LowRankPlusSparse out;
  out.truth.W.resize(r, m);
  out.truth.H.resize(r, n);
  for (Index i = 0; i < out.truth.W.size(); ++i) out.truth.W.data()[i] = unit(rng);
  for (Index i = 0; i < out.truth.H.size(); ++i) out.truth.H.data()[i] = unit(rng);
  out.L = out.truth.W.transpose() * out.truth.H;

  const double peak = spike_scale * out.L.maxCoeff();
  out.S = Matrix::Zero(m, n);
  // Exactly round(density * m * n) spikes at distinct positions.
  const Index total = m * n;
  const auto count = static_cast<Index>(std::llround(density * static_cast<double>(total)));
  std::vector<Index> cells(static_cast<std::size_t>(total));
  std::iota(cells.begin(), cells.end(), Index{0});
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, total - 1);
    std::swap(cells[k], cells[pick(rng)]);
    out.S.data()[cells[k]] = peak * (0.5 + 0.5 * unit(rng));
  }
  out.X = out.L + out.S;
  return out;
}

Matrix inject_noise(const Matrix& X, const NoiseSpec& spec) {
  require_nonnegative(X, "X");
  if (!(spec.magnitude >= 0.0) || !std::isfinite(spec.magnitude)) {
    fail(ErrorCode::kConfiguration, "noise magnitude must be non-negative");
  }
  if (!(spec.density >= 0.0 && spec.density <= 1.0)) {
    fail(ErrorCode::kConfiguration, "noise density must be in [0, 1]");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix Y = X;
  if (X.size() == 0) return Y;

  switch (spec.kind) {
    case NoiseKind::kOcclusion: {
      if (spec.image_rows < 1 || spec.image_cols < 1 ||
          spec.image_rows * spec.image_cols != X.rows()) {
        fail(ErrorCode::kConfiguration, "occlusion needs an image shape matching the rows of X");
      }
      if (spec.magnitude > 1.0) fail(ErrorCode::kConfiguration, "occlusion fraction must be <= 1");
      if (spec.magnitude == 0.0) break;
      const double side = std::sqrt(spec.magnitude);
      const Index bh = std::max<Index>(1, std::lround(side * static_cast<double>(spec.image_rows)));
      const Index bw = std::max<Index>(1, std::lround(side * static_cast<double>(spec.image_cols)));
      const double hi = X.maxCoeff();
      for (Index j = 0; j < X.cols(); ++j) {
        std::uniform_int_distribution<Index> top(0, spec.image_rows - bh);
        std::uniform_int_distribution<Index> left(0, spec.image_cols - bw);
        const Index r0 = top(rng);
        const Index c0 = left(rng);
        const double fill = unit(rng) < 0.5 ? 0.0 : hi;
        for (Index a = r0; a < r0 + bh; ++a) {
          for (Index b = c0; b < c0 + bw; ++b) Y(a * spec.image_cols + b, j) = fill;
        }
      }
      break;
    }
    case NoiseKind::kLaplace: {
      if (spec.magnitude == 0.0 || spec.density == 0.0) break;
      std::bernoulli_distribution hit(spec.density);
      std::exponential_distribution<double> expo(1.0 / spec.magnitude);
      for (Index i = 0; i < Y.size(); ++i) {
        if (!hit(rng)) continue;
        const double mag = expo(rng);
        Y.data()[i] += unit(rng) < 0.5 ? -mag : mag;
      }
      break;
    }
    case NoiseKind::kSaltPepper: {
      if (spec.density == 0.0) break;
      const double lo = X.minCoeff();
      const double hi = X.maxCoeff();
      std::bernoulli_distribution hit(spec.density);
      for (Index i = 0; i < Y.size(); ++i) {
        if (!hit(rng)) continue;
        Y.data()[i] = unit(rng) < 0.5 ? lo : hi;
      }
      break;
    }
    case NoiseKind::kGaussian: {
      if (spec.magnitude == 0.0) break;
      std::normal_distribution<double> gauss(0.0, spec.magnitude);
      for (Index i = 0; i < Y.size(); ++i) Y.data()[i] += gauss(rng);
      break;
    }
    case NoiseKind::kPoisson: {
      if (spec.magnitude == 0.0) break;
      for (Index i = 0; i < Y.size(); ++i) {
        const double mean = Y.data()[i] / spec.magnitude;
        if (mean <= 0.0) continue;
        std::poisson_distribution<long long> draw(mean);
        Y.data()[i] = spec.magnitude * static_cast<double>(draw(rng));
      }
      break;
    }
  }
  if (spec.clamp_nonneg) Y = Y.cwiseMax(0.0);
  return Y;
}

Matrix laplacian_of(const Matrix& similarity) {
  if (similarity.rows() != similarity.cols()) fail(ErrorCode::kDimension, "similarity must be square");
  Matrix L = -similarity;
  L.diagonal() += similarity.rowwise().sum();
  return L;
}

Graph knn_laplacian(const Matrix& X, Index k, double width) {
  const Index n = X.cols();
  if (k < 1 || k >= n) fail(ErrorCode::kDomain, "k must satisfy 1 <= k < number of points");

  Matrix dist(n, n);
  std::vector<double> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index a = 0; a < n; ++a) {
    dist(a, a) = 0.0;
    for (Index b = a + 1; b < n; ++b) {
      const double d = (X.col(a) - X.col(b)).norm();
      dist(a, b) = dist(b, a) = d;
      pairs.push_back(d);
    }
  }
  if (!(width > 0.0)) width = median_of(pairs);
  if (!(width > 0.0)) width = 1.0;

  Graph g;
  g.similarity = Matrix::Zero(n, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index a = 0; a < n; ++a) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index u, Index v) { return dist(a, u) < dist(a, v); });
    Index taken = 0;
    for (Index b : order) {
      if (b == a) continue;
      if (taken++ == k) break;
      const double w = std::exp(-dist(a, b) * dist(a, b) / (width * width));
      g.similarity(a, b) = std::max(g.similarity(a, b), w);
      g.similarity(b, a) = std::max(g.similarity(b, a), w);
    }
  }
  g.laplacian = laplacian_of(g.similarity);
  return g;
}

Matrix image_similarity(const Matrix& brightness, const ImageSimilaritySpec& spec) {
  const Index rows = brightness.rows();
  const Index cols = brightness.cols();
  if (rows < 1 || cols < 1) fail(ErrorCode::kDimension, "image must be non-empty");
  if (!(spec.delta_f > 0.0) || !(spec.delta_l > 0.0)) {
    fail(ErrorCode::kConfiguration, "similarity widths must be positive");
  }
  const Index N = rows * cols;
  auto value = [&](Index p) { return brightness(p / cols, p % cols); };
  auto spatial = [&](Index p, Index q) {
    const double dr = static_cast<double>(p / cols - q / cols);
    const double dc = static_cast<double>(p % cols - q % cols);
    return std::sqrt(dr * dr + dc * dc);
  };

  double max_f = 0.0;
  for (Index p = 0; p < N; ++p) {
    for (Index q = p + 1; q < N; ++q) max_f = std::max(max_f, std::abs(value(p) - value(q)));
  }
  const double max_l = std::sqrt(static_cast<double>((rows - 1) * (rows - 1) + (cols - 1) * (cols - 1)));

  double cutoff = spec.cutoff;
  if (!(cutoff > 0.0)) {
    std::vector<double> dl;
    dl.reserve(static_cast<std::size_t>(N * (N - 1) / 2));
    for (Index p = 0; p < N; ++p) {
      for (Index q = p + 1; q < N; ++q) dl.push_back(max_l > 0.0 ? spatial(p, q) / max_l : 0.0);
    }
    cutoff = median_of(std::move(dl));
  }

  Matrix A(N, N);
  for (Index p = 0; p < N; ++p) {
    A(p, p) = 1.0;
    for (Index q = p + 1; q < N; ++q) {
      const double dl = max_l > 0.0 ? spatial(p, q) / max_l : 0.0;
      double w = 0.0;
      if (dl <= cutoff) {
        const double df = max_f > 0.0 ? std::abs(value(p) - value(q)) / max_f : 0.0;
        w = std::exp(-df * df / (spec.delta_f * spec.delta_f)) *
            std::exp(-dl * dl / (spec.delta_l * spec.delta_l));
      }
      A(p, q) = A(q, p) = w;
    }
  }
  return A;
}

Matrix normalize_similarity(const Matrix& A) {
  if (A.rows() != A.cols()) fail(ErrorCode::kDimension, "similarity must be square");
  const Vector d = A.rowwise().sum();
  Vector s(d.size());
  for (Index i = 0; i < d.size(); ++i) s(i) = d(i) > 0.0 ? 1.0 / std::sqrt(d(i)) : 0.0;
  return s.asDiagonal() * A * s.asDiagonal();
}

double sparseness(const Vector& v) {
  if (v.size() < 2) fail(ErrorCode::kDomain, "sparseness needs at least two entries");
  const double l2 = v.norm();
  if (l2 == 0.0) fail(ErrorCode::kUndefined, "sparseness of a zero vector is undefined");
  const double root = std::sqrt(static_cast<double>(v.size()));
  return (root - v.cwiseAbs().sum() / l2) / (root - 1.0);
}

double mean_column_sparseness(const Matrix& F) {
  double total = 0.0;
  int count = 0;
  for (Index j = 0; j < F.cols(); ++j) {
    const Vector c = F.col(j);
    if (c.size() < 2 || c.norm() == 0.0) continue;
    total += sparseness(c);
    ++count;
  }
  if (count == 0) fail(ErrorCode::kUndefined, "no column has a defined sparseness");
  return total / count;
}

double relative_error(const Matrix& X, const Matrix& X_hat) {
  require_same_shape(X, X_hat, "relative_error");
  const double denom = X.squaredNorm();
  if (denom == 0.0) fail(ErrorCode::kUndefined, "relative error against a zero matrix is undefined");
  return (X - X_hat).squaredNorm() / denom;
}

EucNmfResult eucnmf_baseline(const Matrix& X, Index r, int max_iter, double tol,
                             std::uint64_t seed) {
  require_nonnegative(X, "X");
  if (max_iter < 1) fail(ErrorCode::kConfiguration, "max_iter must be at least 1");
  if (!(tol >= 0.0)) fail(ErrorCode::kConfiguration, "tolerance must be non-negative");
  EucNmfResult out;
  FactorPair& F = out.factors;
  F = initialize_factors(X, r, seed);
  const Matrix Xt = X.transpose();
  double previous = frobenius_sq(X, reconstruct(F.W, F.H));
  for (int it = 0; it < max_iter; ++it) {
    const Matrix numer_h = F.W * X;
    const Matrix denom_h = (F.W * F.W.transpose()) * F.H;
    F.H = F.H.cwiseProduct(numer_h.cwiseQuotient(denom_h.array().max(kEucNmfEpsilon).matrix()));
    const Matrix numer_w = F.H * Xt;
    const Matrix denom_w = (F.H * F.H.transpose()) * F.W;
    F.W = F.W.cwiseProduct(numer_w.cwiseQuotient(denom_w.array().max(kEucNmfEpsilon).matrix()));
    const double current = frobenius_sq(X, reconstruct(F.W, F.H));
    out.objective.push_back(current);
    if (previous - current <= tol * std::max(previous, kEucNmfEpsilon)) break;
    previous = current;
  }
  return out;
}

}  // namespace mahnmf
