#pragma once

#include "compatnet/types.hpp"

namespace compatnet {

struct ProcrustesResult {
  Matrix rotation;    // d x d orthogonal; reflections allowed
  double scale = 1.0; // > 0
  Vector translation; // d
  Matrix aligned;     // scale * source * rotation + 1 * translation'
  double residual_rmse = 0.0;
};

/// Similarity Procrustes: finds orthogonal Q, s > 0 and t minimizing
/// ||s * source * Q + 1 t' - target||_F. Rows are points. A degenerate source
/// (all rows identical) maps every point to the target centroid with Q = I
/// and s = 1.
ProcrustesResult procrustes_align(const Matrix& source, const Matrix& target);

/// Root mean squared difference over all entries.
double coordinate_rmse(const Matrix& a, const Matrix& b);

} // namespace compatnet
