#include "compatnet/stats.hpp"

#include <algorithm>
#include <stdexcept>

namespace compatnet {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double standard_error(std::span<const double> xs) {
  const auto n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return sd / std::sqrt(static_cast<double>(n));
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double r_squared(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || target.empty())
    throw std::invalid_argument("r_squared: length mismatch");
  const double m = mean(target);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    ss_res += (pred[k] - target[k]) * (pred[k] - target[k]);
    ss_tot += (target[k] - m) * (target[k] - m);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

double r_squared(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("r_squared: shape mismatch");
  return r_squared(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
                   std::span<const double>(target.data(), static_cast<std::size_t>(target.size())));
}

double rmse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0)
    throw std::invalid_argument("rmse: shape mismatch");
  return std::sqrt((pred - target).squaredNorm() / static_cast<double>(pred.size()));
}

} // namespace compatnet
