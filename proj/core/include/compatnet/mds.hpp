#pragma once

#include "compatnet/network.hpp"
#include "compatnet/types.hpp"

namespace compatnet {

/// Symmetric (N_d + N_r) square dissimilarity with zero diagonal and entries
/// in [0, 1]. Donors occupy the leading rows, recipients the trailing ones.
struct DissimilarityMatrix {
  Matrix values;
  Index n_donors = 0;
};

/// Pearson correlation of two vectors restricted to indices where both are
/// observed. Returns 0 with fewer than two common indices or zero variance.
double pairwise_complete_correlation(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                                     const Eigen::Array<bool, Eigen::Dynamic, 1>& a_observed,
                                     const Eigen::Array<bool, Eigen::Dynamic, 1>& b_observed);

/// Cross-type entries are 1 - logistic(w) with unobserved w taken as 0;
/// same-type entries are 1 - logistic(rho) for the correlation of the two
/// nodes' observed edge weights.
DissimilarityMatrix build_dissimilarity(const CompatibilityNetwork& net);

/// Classical (Torgerson) scaling of `diss` into `dim` coordinates. Negative
/// Gram eigenvalues are clamped to zero, giving zero coordinates along those
/// directions. Each eigenvector is signed so its largest-magnitude entry is
/// positive.
Matrix classical_mds(const Matrix& diss, Index dim);

inline Matrix classical_mds(const DissimilarityMatrix& diss, Index dim) { return classical_mds(diss.values, dim); }

struct LatentPositions {
  Matrix z_d;
  Matrix z_r;
};

LatentPositions mds_init(const CompatibilityNetwork& net, Index dim);

} // namespace compatnet
