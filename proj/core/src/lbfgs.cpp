#include "compatnet/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace compatnet {

const char* to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
    case LbfgsStatus::Diverged: return "diverged";
  }
  return "unknown";
}

namespace {

struct Correction {
  Vector s;
  Vector y;
  double rho;
};

Vector two_loop(const std::deque<Correction>& memory, const Vector& grad) {
  Vector q = grad;
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alpha[k] * memory[k].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alpha[k] - beta) * memory[k].s;
  }
  return -q;
}

} // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options,
                           const std::vector<bool>& frozen) {
  const Index n = x0.size();
  Vector free_mask = Vector::Ones(n);
  for (Index k = 0; k < n && static_cast<std::size_t>(k) < frozen.size(); ++k)
    if (frozen[static_cast<std::size_t>(k)]) free_mask(k) = 0.0;

  auto evaluate = [&](const Vector& x, Vector& g) {
    const double f = objective(x, g);
    g = g.cwiseProduct(free_mask);
    return f;
  };

  LbfgsResult out;
  out.x = std::move(x0);
  out.gradient.resize(n);
  out.value = evaluate(out.x, out.gradient);
  if (!std::isfinite(out.value) || !out.gradient.allFinite()) {
    out.status = LbfgsStatus::Diverged;
    out.grad_norm = std::numeric_limits<double>::infinity();
    return out;
  }
  out.trace.push_back(out.value);
  out.grad_norm = n > 0 ? out.gradient.lpNorm<Eigen::Infinity>() : 0.0;

  std::deque<Correction> memory;
  Vector x_new(n), g_new(n);
  constexpr double kEps = std::numeric_limits<double>::epsilon();

  for (out.iterations = 0; out.iterations < options.max_iter; ++out.iterations) {
    if (out.grad_norm <= options.grad_tol) {
      out.status = LbfgsStatus::Converged;
      return out;
    }
    Vector direction = two_loop(memory, out.gradient);
    double slope = direction.dot(out.gradient);
    if (!(slope < 0.0)) {
      memory.clear();
      direction = -out.gradient;
      slope = direction.dot(out.gradient);
    }
    double step = memory.empty() ? std::min(1.0, 1.0 / direction.norm()) : 1.0;

    bool accepted = false;
    double f_new = 0.0;
    for (int ls = 0; ls < options.max_line_search; ++ls) {
      x_new = out.x + step * direction;
      f_new = evaluate(x_new, g_new);
      if (std::isfinite(f_new) && g_new.allFinite()) {
        const double noise = 64.0 * kEps * std::abs(out.value);
        const bool armijo = f_new - out.value <= options.armijo * step * slope;
        // Near the optimum the predicted decrease drops below rounding noise.
        const bool noise_floor = -step * slope <= noise && f_new - out.value <= noise &&
                                 g_new.norm() < out.gradient.norm();
        if (armijo || noise_floor) {
          accepted = true;
          break;
        }
        // Safeguarded quadratic interpolation of the step.
        const double denom = 2.0 * (f_new - out.value - step * slope);
        double trial = denom > 0.0 ? -slope * step * step / denom : 0.5 * step;
        step = std::clamp(trial, 0.1 * step, 0.5 * step);
      } else {
        step *= 0.25;
      }
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      out.status = LbfgsStatus::LineSearchFailed;
      return out;
    }

    Vector s = x_new - out.x;
    Vector y = g_new - out.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    out.x = x_new;
    out.gradient = g_new;
    out.value = f_new;
    out.grad_norm = out.gradient.lpNorm<Eigen::Infinity>();
    out.trace.push_back(out.value);
  }
  out.status = out.grad_norm <= options.grad_tol ? LbfgsStatus::Converged : LbfgsStatus::MaxIterations;
  return out;
}

} // namespace compatnet
