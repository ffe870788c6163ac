#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "compatnet/lsm.hpp"
#include "compatnet/network.hpp"
#include "compatnet/rng.hpp"

namespace fixture {

using namespace compatnet;

/// Random network with entries in [-2, 2], standard errors in [0.1, 1] and
/// roughly `missing` of the edges masked (at least one edge stays observed).
inline CompatibilityNetwork random_network(Index nd, Index nr, double missing, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> w(-2.0, 2.0), se(0.1, 1.0), u(0.0, 1.0);
  NetworkData d;
  for (Index i = 0; i < nd; ++i) d.donor_labels.push_back("D" + std::to_string(i + 1));
  for (Index j = 0; j < nr; ++j) d.recipient_labels.push_back("r" + std::to_string(j + 1));
  d.donor_weight.resize(nd);
  d.donor_se.resize(nd);
  d.recipient_weight.resize(nr);
  d.recipient_se.resize(nr);
  for (Index i = 0; i < nd; ++i) {
    d.donor_weight(i) = w(rng);
    d.donor_se(i) = se(rng);
  }
  for (Index j = 0; j < nr; ++j) {
    d.recipient_weight(j) = w(rng);
    d.recipient_se(j) = se(rng);
  }
  d.edge_weight.resize(nd, nr);
  d.edge_se.resize(nd, nr);
  d.edge_mask.resize(nd, nr);
  for (Index i = 0; i < nd; ++i)
    for (Index j = 0; j < nr; ++j) {
      d.edge_weight(i, j) = w(rng);
      d.edge_se(i, j) = se(rng);
      d.edge_mask(i, j) = u(rng) >= missing;
    }
  d.edge_mask(0, 0) = true;
  return CompatibilityNetwork(std::move(d));
}

inline CompatibilityNetwork make_network(const Matrix& w, const Matrix& w_se, const Mask& mask, const Vector& yd,
                                         const Vector& yd_se, const Vector& yr, const Vector& yr_se) {
  NetworkData d;
  for (Index i = 0; i < w.rows(); ++i) d.donor_labels.push_back("D" + std::to_string(i + 1));
  for (Index j = 0; j < w.cols(); ++j) d.recipient_labels.push_back("r" + std::to_string(j + 1));
  d.edge_weight = w;
  d.edge_se = w_se;
  d.edge_mask = mask;
  d.donor_weight = yd;
  d.donor_se = yd_se;
  d.recipient_weight = yr;
  d.recipient_se = yr_se;
  return CompatibilityNetwork(std::move(d));
}

/// Network whose observations are exactly the model's means: w = eta,
/// y_d = delta, y_r = gamma, every standard error `se`.
inline CompatibilityNetwork noiseless_network(const LsmParams& p, double se, const Mask& mask) {
  const Index nd = p.n_donors(), nr = p.n_recipients();
  Matrix w = Matrix::Zero(nd, nr);
  for (Index i = 0; i < nd; ++i)
    for (Index j = 0; j < nr; ++j)
      if (mask(i, j)) w(i, j) = pair_affinity(p, i, j);
  const Matrix w_se = mask.select(Matrix::Constant(nd, nr, se), Matrix::Zero(nd, nr));
  return make_network(w, w_se, mask, p.delta, Vector::Constant(nd, se), p.gamma, Vector::Constant(nr, se));
}

inline Mask full_mask(Index nd, Index nr) { return Mask::Constant(nd, nr, true); }

inline LsmParams random_params(Index nd, Index nr, Index dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> b(0.3, 2.0);
  LsmParams p;
  p.z_d.resize(nd, dim);
  p.z_r.resize(nr, dim);
  for (Index i = 0; i < nd; ++i)
    for (Index k = 0; k < dim; ++k) p.z_d(i, k) = n(rng);
  for (Index j = 0; j < nr; ++j)
    for (Index k = 0; k < dim; ++k) p.z_r(j, k) = n(rng);
  p.alpha = n(rng);
  p.beta = b(rng);
  p.delta.resize(nd);
  p.gamma.resize(nr);
  for (Index i = 0; i < nd; ++i) p.delta(i) = n(rng);
  for (Index j = 0; j < nr; ++j) p.gamma(j) = n(rng);
  return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("compatnet-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  return p;
}

} // namespace fixture
