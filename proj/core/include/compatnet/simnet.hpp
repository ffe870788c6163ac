#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compatnet/lsm.hpp"
#include "compatnet/network.hpp"

namespace compatnet {

/// Which mean the simulated edge observations are centred on.
enum class EdgeMeanConvention {
  PairTermOnly,      // w_ij ~ N(eta_ij, sigma_w^2), matching the likelihood
  FullCompatibility, // w_ij ~ N(eta_ij + delta_i + gamma_j, sigma_w^2)
};

const char* to_string(EdgeMeanConvention c);
EdgeMeanConvention edge_mean_convention_from_string(const std::string& s);

struct SimConfig {
  Index n_d = 20;
  Index n_r = 20;
  Index dim = 2;
  double alpha = 1.0;
  double beta = 1.0;
  double pos_std = 0.70710678118654752; // sqrt(0.5)
  double effect_std = 0.70710678118654752;
  double sigma_w = 0.15;
  double sigma_node = 0.15;
  EdgeMeanConvention edge_mean_convention = EdgeMeanConvention::PairTermOnly;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedNetwork {
  LsmParams truth;
  CompatibilityNetwork observed;
};

/// Fully observed synthetic network with the given latent truth. Draw order:
/// z_d, z_r, delta, gamma, then edge noise (row-major), donor and recipient
/// node noise, all from one stream of `config.seed`.
SimulatedNetwork simulate(const SimConfig& config);

/// Same truth, fresh observation noise drawn from `noise_stream`.
CompatibilityNetwork observe(const LsmParams& truth, const SimConfig& config, std::uint64_t noise_seed);

/// Per-replicate errors between fitted and true parameters.
struct ReplicateMetrics {
  bool ok = false;
  std::string error;
  bool converged = false;
  double log_likelihood = 0.0;
  std::map<std::string, double> rmse; // w, z_d, z_r, delta, gamma, alpha (absolute error)
  std::map<std::string, double> r2;   // w, z_d, z_r, delta, gamma
};

struct SummaryStat {
  double mean = 0.0;
  double se = 0.0;
};

struct ReplicateReport {
  SimConfig config;
  FitConfig fit_config;
  int n_reps = 0;
  int n_failed = 0;
  std::vector<ReplicateMetrics> replicates;
  std::map<std::string, SummaryStat> rmse;
  std::map<std::string, SummaryStat> r2;
};

inline const std::vector<std::string>& table1_rmse_rows() {
  static const std::vector<std::string> rows{"w", "z_d", "z_r", "delta", "gamma", "alpha"};
  return rows;
}
inline const std::vector<std::string>& table1_r2_rows() {
  static const std::vector<std::string> rows{"w", "z_d", "z_r", "delta", "gamma"};
  return rows;
}

/// Errors of one fitted model against its simulated truth. Positions are
/// aligned jointly ([z_d; z_r]) by similarity Procrustes; `w` compares the
/// fitted edge means under the simulation's convention with the observed
/// edge weights.
ReplicateMetrics score_fit(const SimulatedNetwork& sim, const FitResult& fit, EdgeMeanConvention convention);

/// Replicate r simulates with seed config.seed + r and fits with a restart
/// seed derived from (fit_config.seed, r). Failures are recorded, not thrown.
ReplicateReport run_replicates(const SimConfig& config, const FitConfig& fit_config, int n_reps);

nlohmann::json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FitConfig& c);
FitConfig fit_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReplicateReport& r);

/// Plain-text table with RMSE and R^2 blocks, one column per labelled report.
std::string format_table1(const std::vector<std::pair<std::string, const ReplicateReport*>>& columns);

} // namespace compatnet
