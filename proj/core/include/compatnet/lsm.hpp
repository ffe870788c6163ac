#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compatnet/network.hpp"
#include "compatnet/types.hpp"

namespace compatnet {

/// Parameters of the latent space model. Pair affinity is
/// eta_ij = alpha - beta * ||z_d[i] - z_r[j]||^2 and the compatibility is
/// mu_ij = eta_ij + delta[i] + gamma[j].
struct LsmParams {
  Matrix z_d; // N_d x dim
  Matrix z_r; // N_r x dim
  double alpha = 0.0;
  double beta = 1.0; // > 0
  Vector delta;      // donor node effects
  Vector gamma;      // recipient node effects

  Index dim() const { return z_d.cols(); }
  Index n_donors() const { return z_d.rows(); }
  Index n_recipients() const { return z_r.rows(); }

  /// Throws std::invalid_argument if beta <= 0, any entry is non-finite, or
  /// the block shapes disagree.
  void validate() const;
  bool operator==(const LsmParams&) const = default;
};

/// Thrown when parameter or network dimensions disagree.
class DimensionMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when every optimizer start produced a non-finite objective.
class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Standard errors below this value are floored before use as precisions.
inline constexpr double kMinStdErr = 1e-8;

struct FitConfig {
  Index dim = 2;
  int max_iter = 500;
  double grad_tol = 1e-6;
  int restarts = 4;       // random starts beyond the MDS (or user) start
  std::uint64_t seed = 0; // drives the random restarts only
  bool freeze_beta = false;
  int threads = 1;

  void validate() const;
};

struct FitResult {
  LsmParams params;
  double log_likelihood = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  int restart_index = 0;
  bool converged = false;
  std::vector<double> trace; // log-likelihood of accepted iterates of the winning start
};

double pair_affinity(const LsmParams& params, Index i, Index j);
double predict_compatibility(const LsmParams& params, Index i, Index j);

/// Gaussian log-likelihood of the observed node and edge weights; edges enter
/// only where observed and are centred on the pair affinity.
double log_likelihood(const LsmParams& params, const CompatibilityNetwork& net);

/// Packed layout of the free parameters, used by the gradient and the
/// optimizer: [z_d row-major | z_r row-major | alpha | b = log(beta) | delta | gamma].
struct ParamLayout {
  Index n_donors = 0;
  Index n_recipients = 0;
  Index dim = 0;

  Index size() const { return (n_donors + n_recipients) * dim + 2 + n_donors + n_recipients; }
  Index z_d(Index i, Index k) const { return i * dim + k; }
  Index z_r(Index j, Index k) const { return (n_donors + j) * dim + k; }
  Index alpha() const { return (n_donors + n_recipients) * dim; }
  Index log_beta() const { return alpha() + 1; }
  Index delta(Index i) const { return alpha() + 2 + i; }
  Index gamma(Index j) const { return alpha() + 2 + n_donors + j; }

  static ParamLayout of(const LsmParams& p) { return {p.n_donors(), p.n_recipients(), p.dim()}; }
};

Vector pack(const LsmParams& params);
LsmParams unpack(const Vector& x, const ParamLayout& layout);

/// Gradient of log_likelihood in the packed layout, with the slope
/// differentiated through beta = exp(b).
Vector log_likelihood_gradient(const LsmParams& params, const CompatibilityNetwork& net);

/// Maximum likelihood fit by L-BFGS over (z_d, z_r, alpha, log beta, delta,
/// gamma). Start 0 is `init` when given, otherwise classical MDS positions
/// with alpha = 0, beta = 1 and node effects at the observed node weights.
/// Starts 1..restarts draw positions and effects from N(0, 0.25). The start
/// with the highest final log-likelihood wins; ties within 1e-12 go to the
/// lowest index.
FitResult fit(const CompatibilityNetwork& net, const FitConfig& config,
              const std::optional<LsmParams>& init = std::nullopt);

/// Model-based estimates for every donor/recipient pair, observed or not.
struct RefinedNetwork {
  std::vector<std::string> donor_labels;
  std::vector<std::string> recipient_labels;
  Matrix mu;  // eta + delta + gamma
  Matrix eta; // pair affinities
  Vector delta;
  Vector gamma;
};

RefinedNetwork refine_network(const CompatibilityNetwork& net, const FitResult& result);

/// Refined estimates that reproduce the observed weights exactly (masked
/// pairs get eta = 0). Substituting these back is the identity.
RefinedNetwork identity_refinement(const CompatibilityNetwork& net);

nlohmann::json to_json(const LsmParams& params);
LsmParams params_from_json(const nlohmann::json& j);

/// Fields: alpha, beta, z_d, z_r, delta, gamma, dim, log_likelihood,
/// converged, plus iterations, grad_norm and restart_index.
nlohmann::json to_json(const FitResult& result);

} // namespace compatnet
