#include <doctest.h>

#include <cmath>

#include "compatnet/lbfgs.hpp"

using namespace compatnet;

namespace {

double rosenbrock(const Vector& x, Vector& g) {
  g.setZero(x.size());
  double f = 0.0;
  for (Index k = 0; k + 1 < x.size(); ++k) {
    const double a = x(k + 1) - x(k) * x(k), b = 1.0 - x(k);
    f += 100.0 * a * a + b * b;
    g(k) += -400.0 * a * x(k) - 2.0 * b;
    g(k + 1) += 200.0 * a;
  }
  return f;
}

} // namespace

TEST_CASE("rosenbrock converges to the minimum") {
  Vector x0(4);
  x0 << -1.2, 1.0, -1.2, 1.0;
  LbfgsOptions opt;
  opt.max_iter = 2000;
  opt.grad_tol = 1e-10;
  const auto r = minimize_lbfgs(rosenbrock, x0, opt);
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK((r.x - Vector::Ones(4)).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(r.grad_norm <= 1e-10);
}

TEST_CASE("accepted iterates never increase the objective") {
  Vector x0(6);
  x0 << -1.5, 2.0, 0.3, -0.7, 1.9, -2.0;
  const auto r = minimize_lbfgs(rosenbrock, x0, LbfgsOptions{});
  REQUIRE(r.trace.size() >= 2);
  Vector g;
  CHECK(r.trace.front() == rosenbrock(x0, g));
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] <= r.trace[k - 1]);
  CHECK(r.value == r.trace.back());
}

TEST_CASE("frozen coordinates keep their starting values") {
  // Separable quadratic with minimum at (1, 2, 3); the middle coordinate is frozen at 7.
  auto f = [](const Vector& x, Vector& g) {
    const Vector c = (Vector(3) << 1.0, 2.0, 3.0).finished();
    g = 2.0 * (x - c);
    return (x - c).squaredNorm();
  };
  const Vector x0 = (Vector(3) << 0.0, 7.0, 0.0).finished();
  const auto r = minimize_lbfgs(f, x0, LbfgsOptions{}, {false, true, false});
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK(r.x(1) == 7.0);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.x(2) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("iteration cap is reported") {
  Vector x0(2);
  x0 << -1.2, 1.0;
  LbfgsOptions opt;
  opt.max_iter = 3;
  const auto r = minimize_lbfgs(rosenbrock, x0, opt);
  CHECK(r.status == LbfgsStatus::MaxIterations);
  CHECK(r.iterations == 3);
}

TEST_CASE("starting at the minimum returns immediately") {
  const Vector x0 = Vector::Ones(3);
  const auto r = minimize_lbfgs(rosenbrock, x0, LbfgsOptions{});
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK(r.iterations == 0);
  CHECK(r.x == x0);
}
