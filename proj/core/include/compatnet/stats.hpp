#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "compatnet/types.hpp"

namespace compatnet {

inline constexpr double kLogisticClamp = 30.0;
inline constexpr double kProbClamp = 1e-9;

/// 1 / (1 + exp(-x)) with x clamped to [-30, 30].
inline double logistic(double x) {
  const double c = std::clamp(x, -kLogisticClamp, kLogisticClamp);
  return 1.0 / (1.0 + std::exp(-c));
}

/// log(p / (1 - p)), no clamping.
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// p clamped to [1e-9, 1 - 1e-9].
inline double clamp_probability(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

/// log N(x | mean, sd^2).
inline double log_normal_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) - 0.5 * z * z;
}

double mean(std::span<const double> xs);

/// Standard error of the mean; 0 for fewer than two samples.
double standard_error(std::span<const double> xs);

double median(std::vector<double> xs);

/// 1 - SS_res / SS_tot with SS_tot taken about the mean of `target`.
double r_squared(std::span<const double> pred, std::span<const double> target);
double r_squared(const Matrix& pred, const Matrix& target);

double rmse(const Matrix& pred, const Matrix& target);

} // namespace compatnet
