#pragma once

#include <cstdint>
#include <vector>

#include "compatnet/types.hpp"

namespace compatnet {

/// Replaces unobserved entries with their column mean over observed entries,
/// or with the global observed mean for a column with no observations.
Matrix impute_missing(const Matrix& weights, const Mask& observed);

/// Rank-`dim` reconstruction: column-centre, truncate the SVD, restore the
/// column means. Requires 1 <= dim <= min(rows, cols).
Matrix pca_refine(const Matrix& weights, Index dim);

struct NmtfConfig {
  Index rank = 2;
  int max_iter = 2000;
  double tol = 1e-9; // relative objective change
  std::uint64_t seed = 0;
};

/// Non-negative tri-factorization V ~ F S G' minimizing ||V - F S G'||_F^2.
struct NmtfFactors {
  Matrix f; // rows x k
  Matrix s; // k x k
  Matrix g; // cols x k
  std::vector<double> objective; // after initialization, then after every sweep
  int iterations = 0;
  bool converged = false;
};

/// Multiplicative updates (F, then G, then S per sweep) from a seeded
/// uniform(0, 1) start. `v` must be non-negative.
NmtfFactors nmtf_factorize(const Matrix& v, const NmtfConfig& config);

struct NmtfRefinement {
  Matrix reconstruction;
  int iterations = 0;
  bool converged = false;
};

/// logistic -> tri-factorize -> clamp to [1e-9, 1 - 1e-9] -> logit.
NmtfRefinement nmtf_refine(const Matrix& weights, const NmtfConfig& config);

} // namespace compatnet
