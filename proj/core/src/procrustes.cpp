#include "compatnet/procrustes.hpp"

#include <stdexcept>

namespace compatnet {

double coordinate_rmse(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() == 0)
    throw std::invalid_argument("coordinate_rmse: shape mismatch");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

ProcrustesResult procrustes_align(const Matrix& source, const Matrix& target) {
  if (source.rows() != target.rows() || source.cols() != target.cols())
    throw std::invalid_argument("procrustes_align: source and target shapes differ");
  const Index n = source.rows(), d = source.cols();
  if (n < d || d < 1) throw std::invalid_argument("procrustes_align: need n >= d >= 1");

  const Eigen::RowVectorXd source_mean = source.colwise().mean();
  const Eigen::RowVectorXd target_mean = target.colwise().mean();
  const Matrix sc = source.rowwise() - source_mean;
  const Matrix tc = target.rowwise() - target_mean;

  ProcrustesResult r;
  const double source_ss = sc.squaredNorm();
  if (source_ss <= 1e-300) {
    r.rotation = Matrix::Identity(d, d);
    r.scale = 1.0;
  } else {
    Eigen::JacobiSVD<Matrix> svd(sc.transpose() * tc, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r.rotation = svd.matrixU() * svd.matrixV().transpose();
    const double trace = svd.singularValues().sum();
    r.scale = trace > 0.0 ? trace / source_ss : 1.0;
  }
  r.translation = (target_mean - r.scale * source_mean * r.rotation).transpose();
  r.aligned = (r.scale * source * r.rotation).rowwise() + r.translation.transpose();
  r.residual_rmse = coordinate_rmse(r.aligned, target);
  return r;
}

} // namespace compatnet
