#include "compatnet/mds.hpp"

#include <cmath>
#include <stdexcept>

#include "compatnet/stats.hpp"

namespace compatnet {

double pairwise_complete_correlation(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                                     const Eigen::Array<bool, Eigen::Dynamic, 1>& a_observed,
                                     const Eigen::Array<bool, Eigen::Dynamic, 1>& b_observed) {
  double sa = 0.0, sb = 0.0;
  Index n = 0;
  for (Index k = 0; k < a.size(); ++k) {
    if (!a_observed(k) || !b_observed(k)) continue;
    sa += a(k);
    sb += b(k);
    ++n;
  }
  if (n < 2) return 0.0;
  const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    if (!a_observed(k) || !b_observed(k)) continue;
    const double da = a(k) - ma, db = b(k) - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

DissimilarityMatrix build_dissimilarity(const CompatibilityNetwork& net) {
  const Index nd = net.n_donors(), nr = net.n_recipients(), n = nd + nr;
  const Matrix& w = net.edge_weight(); // masked entries are already 0
  const Mask& mask = net.edge_mask();

  DissimilarityMatrix out;
  out.n_donors = nd;
  out.values = Matrix::Zero(n, n);
  for (Index i = 0; i < nd; ++i) {
    for (Index j = 0; j < nr; ++j) {
      const double d = 1.0 - logistic(w(i, j));
      out.values(i, nd + j) = d;
      out.values(nd + j, i) = d;
    }
  }
  for (Index a = 0; a < nd; ++a) {
    for (Index b = a + 1; b < nd; ++b) {
      const double rho = pairwise_complete_correlation(w.row(a).transpose(), w.row(b).transpose(),
                                                       mask.row(a).transpose(), mask.row(b).transpose());
      out.values(a, b) = out.values(b, a) = 1.0 - logistic(rho);
    }
  }
  for (Index a = 0; a < nr; ++a) {
    for (Index b = a + 1; b < nr; ++b) {
      const double rho = pairwise_complete_correlation(w.col(a), w.col(b), mask.col(a), mask.col(b));
      out.values(nd + a, nd + b) = out.values(nd + b, nd + a) = 1.0 - logistic(rho);
    }
  }
  return out;
}

Matrix classical_mds(const Matrix& diss, Index dim) {
  const Index n = diss.rows();
  if (diss.cols() != n) throw std::invalid_argument("classical_mds: dissimilarity must be square");
  if (dim < 1 || dim > n) throw std::invalid_argument("classical_mds: dim must be in [1, n]");

  const Matrix d2 = diss.array().square().matrix();
  // B = -1/2 J D2 J with J = I - 11'/n, applied as row/column centering.
  Matrix b = d2;
  b.rowwise() -= d2.colwise().mean();
  b.colwise() -= b.rowwise().mean();
  b *= -0.5;
  b = 0.5 * (b + b.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
  if (eig.info() != Eigen::Success) throw std::runtime_error("classical_mds: eigendecomposition failed");

  Matrix coords(n, dim);
  for (Index k = 0; k < dim; ++k) {
    const Index src = n - 1 - k; // eigenvalues ascend
    Vector v = eig.eigenvectors().col(src);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    const double lambda = std::max(0.0, eig.eigenvalues()(src));
    coords.col(k) = std::sqrt(lambda) * v;
  }
  return coords;
}

LatentPositions mds_init(const CompatibilityNetwork& net, Index dim) {
  const auto diss = build_dissimilarity(net);
  const Matrix coords = classical_mds(diss, dim);
  return {coords.topRows(net.n_donors()), coords.bottomRows(net.n_recipients())};
}

} // namespace compatnet
