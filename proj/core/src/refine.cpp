#include "compatnet/metrics.hpp"

#include <stdexcept>

namespace compatnet {

RefinedNetwork refine(const CompatibilityNetwork& train, RefineMethod method, Index dim,
                      const RefineOptions& options) {
  if (method == RefineMethod::Raw) return identity_refinement(train);

  if (method == RefineMethod::Lsm) {
    FitConfig fc = options.lsm;
    fc.dim = dim;
    return refine_network(train, fit(train, fc));
  }

  const Index max_dim = std::min(train.n_donors(), train.n_recipients());
  if (dim < 1 || dim > max_dim)
    throw std::invalid_argument(std::string(to_string(method)) + ": dimension must be in [1, min(N_d, N_r)]");

  const bool on_mu = options.scale == EvalScale::Compatibility;
  const Matrix base = impute_missing(on_mu ? train.compatibility_matrix() : train.edge_weight(), train.edge_mask());
  Matrix refined_base;
  if (method == RefineMethod::Pca) {
    refined_base = pca_refine(base, dim);
  } else {
    NmtfConfig nc = options.nmtf;
    nc.rank = dim;
    refined_base = nmtf_refine(base, nc).reconstruction;
  }

  RefinedNetwork r;
  r.donor_labels = train.donor_labels();
  r.recipient_labels = train.recipient_labels();
  r.delta = train.donor_weight();
  r.gamma = train.recipient_weight();
  Matrix nodes = Matrix::Zero(train.n_donors(), train.n_recipients());
  nodes.colwise() += r.delta;
  nodes.rowwise() += r.gamma.transpose();
  if (on_mu) {
    r.mu = std::move(refined_base);
    r.eta = r.mu - nodes;
  } else {
    r.eta = std::move(refined_base);
    r.mu = r.eta + nodes;
  }
  return r;
}

} // namespace compatnet
