#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compatnet/metrics.hpp"
#include "compatnet/survival.hpp"
#include "compatnet/transplant.hpp"

namespace compatnet {

/// Coefficient-substitution pipeline: fit a ridge Cox model on the training
/// split, read its type and pair coefficients as a compatibility network,
/// refine the network, write the refined values back into the model and
/// compare test C-indices.
struct PipelineConfig {
  Index min_count = 20;
  std::vector<double> lambda_grid = default_lambda_grid();
  FitConfig lsm = [] {
    FitConfig c;
    c.max_iter = 2000;
    return c;
  }();
  NmtfConfig nmtf;
  std::vector<Index> lsm_dims{2};
  std::vector<Index> nmtf_dims{2};
  std::vector<Index> pca_dims{2};
  std::vector<RefineMethod> methods{RefineMethod::Lsm, RefineMethod::Nmtf, RefineMethod::Pca};
  EvalScale scale = EvalScale::Compatibility;
  /// Debug: every method substitutes the raw estimates back unchanged.
  bool identity_refinement = false;

  void validate() const;
  const std::vector<Index>& dims_for(RefineMethod m) const;
};

struct MethodOutcome {
  RefineMethod method = RefineMethod::Raw;
  Index dim = 0;
  double c_index = 0.0;
  double delta_c_index = 0.0; // against the raw model
  bool converged = true;
  std::optional<RefinementEvaluation> selection; // when several dims were tried
};

struct PipelineResult {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  bool cox_converged = false;
  Index n_columns = 0;
  Index n_observed_pairs = 0;
  double train_censored = 0.0;
  double test_censored = 0.0;
  double raw_c_index = 0.0;
  std::vector<MethodOutcome> methods;

  const MethodOutcome* find(RefineMethod m) const;
};

/// Runs the pipeline on given splits. `seed` drives the CV folds and the
/// refiners' random starts.
PipelineResult run_pipeline(const TransplantDataset& train, const TransplantDataset& test,
                            const PipelineConfig& config, std::uint64_t seed);

/// Generates the splits from `gen` and runs the pipeline with seed gen.seed.
PipelineResult pipeline_end_to_end(const TransplantGenConfig& gen, const PipelineConfig& config);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::optional<PipelineResult> result;
  std::string error;
};

struct MethodSummary {
  RefineMethod method = RefineMethod::Raw;
  int n = 0;
  double median_delta = 0.0;
  double median_abs_delta = 0.0;
  double mean_delta = 0.0;
  double fraction_improved = 0.0;
};

struct PipelineBatch {
  std::optional<TransplantGenConfig> gen; // synthetic batches only
  PipelineConfig config;
  std::vector<SeedOutcome> seeds;
  std::vector<MethodSummary> summary;
  double median_raw_c_index = 0.0;
  int n_failed = 0;
};

/// Seed s uses generator seed gen.seed + s. Failures are recorded per seed.
PipelineBatch run_pipeline_batch(const TransplantGenConfig& gen, const PipelineConfig& config, int n_seeds,
                                 int threads);

/// Batch over a fixed dataset. Seed s uses seed + s for the folds and
/// refiners; without `test`, each seed also draws its own half/half split of
/// `data`.
PipelineBatch run_pipeline_batch(const TransplantDataset& data, const std::optional<TransplantDataset>& test,
                                 const PipelineConfig& config, int n_seeds, std::uint64_t seed, int threads);

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineResult& r);
nlohmann::json to_json(const PipelineBatch& b);
std::string format_pipeline_table(const PipelineBatch& b);

} // namespace compatnet
