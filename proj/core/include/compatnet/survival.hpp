#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compatnet/lsm.hpp"
#include "compatnet/network.hpp"
#include "compatnet/types.hpp"

namespace compatnet {

/// Survival records: one donor type and one recipient type per subject.
struct TransplantDataset {
  Matrix covariates; // n x p basic covariates
  std::vector<std::string> donor_type;
  std::vector<std::string> recipient_type;
  Vector time;                     // > 0
  std::vector<std::uint8_t> event; // 1 = graft failure observed, 0 = censored

  Index size() const { return time.size(); }
  /// Throws std::invalid_argument on length mismatch, non-positive times or no events.
  void validate() const;
  TransplantDataset subset(const std::vector<Index>& rows) const;
};

/// Header: id,time,event,donor_type,recipient_type,x1..xp
void save_dataset(const TransplantDataset& data, const std::filesystem::path& path);
TransplantDataset load_dataset(const std::filesystem::path& path);

enum class ColumnKind { Basic, DonorType, RecipientType, Pair };

struct ColumnInfo {
  ColumnKind kind = ColumnKind::Basic;
  std::string name;
  std::string donor;     // DonorType and Pair columns
  std::string recipient; // RecipientType and Pair columns
  Index basic_index = 0; // Basic columns
  Index support = 0;     // subjects with a nonzero entry in the fitting data

  bool operator==(const ColumnInfo&) const = default;
};

struct DesignMatrix {
  Matrix x;
  std::vector<ColumnInfo> columns;
};

/// Basic covariates, then one-hot donor types, recipient types and
/// donor/recipient pair indicators (each block in sorted label order). Type
/// and pair columns active in fewer than `min_count` subjects are dropped.
DesignMatrix design_matrix(const TransplantDataset& data, Index min_count);

/// Encodes `data` with an existing column layout; support is recounted.
DesignMatrix apply_design(const TransplantDataset& data, const std::vector<ColumnInfo>& columns);

class CoxError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CoxModel {
  Vector coefficients;
  Vector std_errors;
  double penalty = 0.0;
  std::vector<ColumnInfo> columns;
  bool converged = false;
  int iterations = 0;
  double log_partial_likelihood = 0.0; // unpenalized, at the optimum
  double grad_norm = 0.0;              // of the penalized objective

  std::vector<std::string> column_names() const;
  Vector risk_scores(const Matrix& x) const { return x * coefficients; }
};

/// Breslow partial log-likelihood and optionally its gradient and negative
/// Hessian (observed information).
struct PartialLikelihood {
  double value = 0.0;
  Vector gradient;
  Matrix information;
};

PartialLikelihood cox_partial_likelihood(const Matrix& x, const Vector& time, const std::vector<std::uint8_t>& event,
                                         const Vector& coefficients, bool derivatives = true);

/// Maximizes the Breslow partial log-likelihood minus (lambda / 2) ||w||^2
/// by Newton steps with step halving; standard errors come from the inverse
/// penalized information. Stops at gradient infinity-norm <= 1e-8 or after
/// 100 iterations.
CoxModel cox_fit(const DesignMatrix& design, const Vector& time, const std::vector<std::uint8_t>& event,
                 double lambda, const std::optional<Vector>& init = std::nullopt);

/// Ten log-spaced values from 1e-3 to 1e2.
std::vector<double> default_lambda_grid();

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> validation_loglik; // summed over both fold directions
};

/// Two-fold cross-validation maximizing held-out unpenalized partial
/// log-likelihood. Folds are redrawn (up to 10 times) until both contain an
/// event.
LambdaSelection tune_lambda(const DesignMatrix& design, const Vector& time, const std::vector<std::uint8_t>& event,
                            const std::vector<double>& lambda_grid, std::uint64_t seed);

/// Harrell's concordance index. Pair (i, j) is comparable when i has an event
/// and t_i < t_j, or t_i == t_j with only i having the event; it is
/// concordant when risk_i > risk_j and scores 0.5 on tied risks.
double c_index(const Vector& risk, const Vector& time, const std::vector<std::uint8_t>& event);

/// Network of negated type and pair coefficients with their standard
/// errors. Pair columns with support below `min_support`, or whose types have
/// no column, are left out (masked).
CompatibilityNetwork extract_network(const CoxModel& model, Index min_support = 1);

/// Copy of `model` with donor-type coefficients set to -delta, recipient-type
/// coefficients to -gamma and pair coefficients to -eta. Basic covariates are
/// untouched; no columns are added. Throws std::invalid_argument when a type
/// column has no counterpart in `refined`.
CoxModel substitute_coefficients(const CoxModel& model, const RefinedNetwork& refined);

nlohmann::json to_json(const CoxModel& model);
CoxModel cox_model_from_json(const nlohmann::json& j);

} // namespace compatnet
