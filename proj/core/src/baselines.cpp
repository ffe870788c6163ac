#include "compatnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "compatnet/rng.hpp"
#include "compatnet/stats.hpp"

namespace compatnet {

Matrix impute_missing(const Matrix& weights, const Mask& observed) {
  if (observed.rows() != weights.rows() || observed.cols() != weights.cols())
    throw std::invalid_argument("impute_missing: mask shape mismatch");
  const Index n_obs = observed.count();
  if (n_obs == 0) throw std::invalid_argument("impute_missing: no observed entries");
  const double global = observed.select(weights.array(), 0.0).sum() / static_cast<double>(n_obs);
  Matrix out = weights;
  for (Index j = 0; j < weights.cols(); ++j) {
    const Index n = observed.col(j).count();
    const double fill =
        n > 0 ? observed.col(j).select(weights.col(j).array(), 0.0).sum() / static_cast<double>(n) : global;
    for (Index i = 0; i < weights.rows(); ++i)
      if (!observed(i, j)) out(i, j) = fill;
  }
  return out;
}

Matrix pca_refine(const Matrix& weights, Index dim) {
  if (dim < 1 || dim > std::min(weights.rows(), weights.cols()))
    throw std::invalid_argument("pca_refine: dim must be in [1, min(rows, cols)]");
  const Eigen::RowVectorXd means = weights.colwise().mean();
  const Matrix centered = weights.rowwise() - means;
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix recon = svd.matrixU().leftCols(dim) * svd.singularValues().head(dim).asDiagonal() *
                       svd.matrixV().leftCols(dim).transpose();
  return recon.rowwise() + means;
}

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

double objective(const Matrix& v, const Matrix& f, const Matrix& s, const Matrix& g) {
  return (v - f * s * g.transpose()).squaredNorm();
}

// x <- x .* num ./ den, elementwise.
void multiplicative(Matrix& x, const Matrix& num, const Matrix& den) {
  x = x.cwiseProduct(num).cwiseQuotient(den.cwiseMax(kTiny));
}

} // namespace

NmtfFactors nmtf_factorize(const Matrix& v, const NmtfConfig& config) {
  if (config.rank < 1) throw std::invalid_argument("nmtf: rank must be >= 1");
  if ((v.array() < 0.0).any()) throw std::invalid_argument("nmtf: input must be non-negative");
  const Index k = config.rank;
  auto rng = make_rng(config.seed, "nmtf-init");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](Index r, Index c) {
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) {
      double u = 0.0;
      while (u == 0.0) u = unif(rng);
      m.data()[i] = u;
    }
    return m;
  };
  NmtfFactors out;
  out.f = draw(v.rows(), k);
  out.s = draw(k, k);
  out.g = draw(v.cols(), k);
  out.objective.push_back(objective(v, out.f, out.s, out.g));

  for (out.iterations = 0; out.iterations < config.max_iter;) {
    // F <- F .* (V G S') ./ (F S G' G S')
    {
      const Matrix gs = out.g * out.s.transpose();
      multiplicative(out.f, v * gs, out.f * (gs.transpose() * gs));
    }
    // G <- G .* (V' F S) ./ (G S' F' F S)
    {
      const Matrix fs = out.f * out.s;
      multiplicative(out.g, v.transpose() * fs, out.g * (fs.transpose() * fs));
    }
    // S <- S .* (F' V G) ./ (F' F S G' G)
    multiplicative(out.s, out.f.transpose() * v * out.g,
                   (out.f.transpose() * out.f) * out.s * (out.g.transpose() * out.g));
    ++out.iterations;
    const double prev = out.objective.back();
    const double cur = objective(v, out.f, out.s, out.g);
    out.objective.push_back(cur);
    if (std::abs(prev - cur) <= config.tol * std::max(prev, kTiny)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

NmtfRefinement nmtf_refine(const Matrix& weights, const NmtfConfig& config) {
  if (config.rank > std::min(weights.rows(), weights.cols()))
    throw std::invalid_argument("nmtf_refine: rank exceeds min(rows, cols)");
  const Matrix v = weights.unaryExpr([](double x) { return logistic(x); });
  const auto factors = nmtf_factorize(v, config);
  const Matrix recon = factors.f * factors.s * factors.g.transpose();
  NmtfRefinement out;
  out.reconstruction = recon.unaryExpr([](double p) { return logit(clamp_probability(p)); });
  out.iterations = factors.iterations;
  out.converged = factors.converged;
  return out;
}

} // namespace compatnet
