#pragma once

#include <chrono>
#include <optional>
#include <vector>

#include "mahnmf/solver.hpp"

namespace mahnmf::detail {

/// Validated input plus feasible starting factors.
struct PreparedRun {
  FactorPair F;
  std::vector<double> radii_w;
  std::vector<double> radii_h;
};

/// Checks X and cfg, builds or checks the initial factors and projects them
/// onto the variant's feasible set (deriving default group radii).
PreparedRun prepare_run(const Matrix& X, const SolverConfig& cfg,
                        const std::optional<FactorPair>& init);

/// Gershgorin bound on the spectral norm of a symmetric matrix.
double symmetric_norm_bound(const Matrix& A);

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace mahnmf::detail
