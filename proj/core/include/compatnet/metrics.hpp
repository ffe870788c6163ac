#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compatnet/baselines.hpp"
#include "compatnet/lsm.hpp"
#include "compatnet/network.hpp"

namespace compatnet {

double rmse(std::span<const double> pred, std::span<const double> obs);

/// Mean over k of log N(pred_k | obs_k, obs_se_k^2).
double mean_log_prob(std::span<const double> pred, std::span<const double> obs, std::span<const double> obs_se);

/// Fraction of k where (pred_k >= 0) == (obs_k >= 0). Zero counts as positive.
double sign_accuracy(std::span<const double> pred, std::span<const double> obs);

struct EvalReport {
  double rmse = 0.0;
  double mean_log_prob = 0.0;
  double sign_accuracy = 0.0;
  Index n_pairs = 0;
};

enum class RefineMethod { Raw, Lsm, Nmtf, Pca };

const char* to_string(RefineMethod m);
RefineMethod refine_method_from_string(const std::string& s);

/// Scale on which predictions and targets are compared.
enum class EvalScale {
  Compatibility, // mu = delta + gamma + eta
  PairTerm,      // eta / w only
};

struct RefineOptions {
  FitConfig lsm;   // dim is overridden per call
  NmtfConfig nmtf; // rank is overridden per call
  EvalScale scale = EvalScale::Compatibility;
};

/// Refines a network with one method at one dimension. Raw returns the
/// observed weights. PCA and NMTF operate on the mean-imputed compatibility
/// matrix (or the edge-weight matrix under EvalScale::PairTerm) and keep the
/// observed node weights as delta and gamma, so eta = mu - delta - gamma.
RefinedNetwork refine(const CompatibilityNetwork& train, RefineMethod method, Index dim,
                      const RefineOptions& options);

/// Thrown when two networks share no observed pair.
class NoCommonPairs : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Scores refined predictions against a held-out network over pairs
/// observed in both.
EvalReport score_refinement(const CompatibilityNetwork& train, const RefinedNetwork& refined,
                            const CompatibilityNetwork& test, EvalScale scale);

struct DimensionReport {
  Index dim = 0;
  EvalReport report;
};

struct RefinementEvaluation {
  RefineMethod method = RefineMethod::Raw;
  std::vector<DimensionReport> per_dim; // Raw: a single entry with dim 0
  Index selected_dim = 0;
  EvalReport selected;
};

/// Refines `train` at every grid dimension and keeps the dimension with the
/// best mean log-probability on `test` (first one on ties).
RefinementEvaluation evaluate_refinement(const CompatibilityNetwork& train, const CompatibilityNetwork& test,
                                         RefineMethod method, const std::vector<Index>& dim_grid,
                                         const RefineOptions& options = {});

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const RefinementEvaluation& e);

/// Metric x method table (RMSE, mean log-prob, sign accuracy).
std::string format_eval_table(const std::vector<RefinementEvaluation>& evaluations);

} // namespace compatnet
