#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compatnet/simnet.hpp"
#include "compatnet/survival.hpp"

namespace compatnet {

/// Synthetic transplant cohorts with a planted latent-space compatibility
/// structure.
struct TransplantGenConfig {
  Index n_per_split = 4000;
  Index n_donor_types = 12;
  Index n_recipient_types = 12;
  Index n_basic = 4;
  /// Latent truth; n_d / n_r are replaced by the type counts.
  SimConfig latent;
  /// Multiplies delta, gamma and eta before they enter the hazard.
  double effect_scale = 0.25;
  double basic_coef_std = 0.5;
  double baseline_hazard = 0.1;
  double censor_fraction = 0.75;
  /// Negative control: randomly permute the pair effects across pairs.
  bool destroy_structure = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TransplantTruth {
  LsmParams latent;              // unscaled planted parameters
  std::vector<std::string> donor_types;
  std::vector<std::string> recipient_types;
  Vector delta;                  // scaled donor compatibilities
  Vector gamma;                  // scaled recipient compatibilities
  Matrix eta;                    // scaled (possibly permuted) pair compatibilities
  Vector basic_coefficients;
  double censor_rate = 0.0;
};

struct TransplantSimulation {
  TransplantDataset train;
  TransplantDataset test;
  TransplantTruth truth;
};

/// Types uniform, basic covariates standard normal, log hazard ratio
/// x'b - (delta + gamma + eta), exponential event times with the baseline
/// hazard and independent exponential censoring whose rate is solved so the
/// expected censored fraction over both splits equals `censor_fraction`.
TransplantSimulation simulate_transplants(const TransplantGenConfig& config);

/// Linear predictor of the planted model for each subject.
Vector true_linear_predictor(const TransplantDataset& data, const TransplantTruth& truth);

nlohmann::json to_json(const TransplantGenConfig& c);
TransplantGenConfig transplant_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TransplantTruth& t);

} // namespace compatnet
