#pragma once

#include <functional>
#include <vector>

#include "compatnet/types.hpp"

namespace compatnet {

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 500;
  double grad_tol = 1e-6; // on the infinity norm
  int max_line_search = 60;
  double armijo = 1e-4;
};

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailed, Diverged };

const char* to_string(LbfgsStatus status);

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  double grad_norm = 0.0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  std::vector<double> trace; // objective at every accepted iterate, starting point first
};

/// Objective returning f(x) and writing its gradient into `grad`.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

/// Limited-memory BFGS minimization with backtracking Armijo line search.
/// Coordinates flagged in `frozen` keep their starting values. Accepted
/// iterates never increase the objective.
LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options,
                           const std::vector<bool>& frozen = {});

} // namespace compatnet
