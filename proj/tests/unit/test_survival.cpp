#include <doctest.h>

#include <cmath>
#include <functional>

#include "compatnet/lsm.hpp"
#include "compatnet/rng.hpp"
#include "compatnet/survival.hpp"
#include "oracles.hpp"

using namespace compatnet;

namespace {

using Events = std::vector<std::uint8_t>;

DesignMatrix basic_design(const Matrix& x) {
  DesignMatrix d;
  d.x = x;
  for (Index k = 0; k < x.cols(); ++k) {
    ColumnInfo c;
    c.name = "x" + std::to_string(k + 1);
    c.basic_index = k;
    d.columns.push_back(c);
  }
  return d;
}

struct Cohort {
  Matrix x;
  Vector time;
  Events event;
};

/// Exponential times with log hazard x * w and roughly `censor` censoring.
Cohort exponential_cohort(Index n, const Vector& w, double censor, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Cohort c;
  c.x = Matrix::NullaryExpr(n, w.size(), [&] { return g(rng); });
  c.time.resize(n);
  c.event.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    c.time(i) = e(rng) / std::exp(c.x.row(i).dot(w));
    c.event[static_cast<std::size_t>(i)] = u(rng) >= censor;
  }
  return c;
}

std::vector<bool> as_bool(const Events& e) { return {e.begin(), e.end()}; }

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Finite 1-D Breslow optimum exists iff the score is positive at -inf and
/// negative at +inf.
bool has_finite_optimum(const std::vector<double>& x, const std::vector<double>& t, const std::vector<bool>& ev) {
  bool below_max = false, above_min = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!ev[i]) continue;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (t[j] < t[i]) continue;
      below_max |= x[j] > x[i];
      above_min |= x[j] < x[i];
    }
  }
  return below_max && above_min;
}

} // namespace

TEST_CASE("two-subject partial likelihood at zero") {
  Matrix x(2, 1);
  x << 1.0, 0.0;
  const Vector t = (Vector(2) << 1.0, 2.0).finished();
  const auto pl = cox_partial_likelihood(x, t, {1, 1}, Vector::Zero(1));
  CHECK(pl.value == doctest::Approx(-0.693147).epsilon(1e-6));
}

TEST_CASE("partial likelihood matches the 1-D Breslow oracle with ties") {
  Rng rng(1);
  std::uniform_int_distribution<int> ti(1, 4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution b(0.7);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 7;
    Matrix x(n, 1);
    Vector t(n);
    Events ev(n);
    for (Index i = 0; i < n; ++i) {
      x(i, 0) = g(rng);
      t(i) = ti(rng);
      ev[static_cast<std::size_t>(i)] = b(rng);
    }
    ev[0] = 1;
    const double w = g(rng);
    const auto pl = cox_partial_likelihood(x, t, ev, Vector::Constant(1, w));
    CHECK(pl.value == doctest::Approx(oracle::breslow_1d(w, as_std(x.col(0)), as_std(t), as_bool(ev))).epsilon(1e-12));
    const Vector fd = oracle::finite_difference(
        [&](const Vector& v) { return cox_partial_likelihood(x, t, ev, v, false).value; }, Vector::Constant(1, w), 1e-6);
    CHECK(pl.gradient(0) == doctest::Approx(fd(0)).epsilon(1e-7));
  }
}

TEST_CASE("three-subject fits match a grid search") {
  Rng rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  int done = 0;
  while (done < 10) {
    std::vector<double> xs(3), ts(3);
    std::vector<bool> ev(3);
    for (int i = 0; i < 3; ++i) {
      xs[i] = g(rng);
      ts[i] = e(rng);
      ev[i] = true;
    }
    if (!has_finite_optimum(xs, ts, ev)) continue;
    const Matrix x = Eigen::Map<const Vector>(xs.data(), 3);
    const Vector t = Eigen::Map<const Vector>(ts.data(), 3);
    const auto m = cox_fit(basic_design(x), t, {1, 1, 1}, 0.0);
    const double best =
        oracle::grid_argmax([&](double w) { return oracle::breslow_1d(w, xs, ts, ev); }, -30.0, 30.0, 1e-7);
    CHECK(m.converged);
    CHECK(std::abs(m.coefficients(0) - best) <= 1e-4);
    ++done;
  }
}

TEST_CASE("ridge keeps separable data finite") {
  Matrix x(4, 1);
  x << 3.0, 2.0, 1.0, 0.0; // higher x always fails first
  const Vector t = (Vector(4) << 1.0, 2.0, 3.0, 4.0).finished();
  const auto m = cox_fit(basic_design(x), t, {1, 1, 1, 1}, 1.0);
  CHECK(m.converged);
  CHECK(std::isfinite(m.coefficients(0)));
  CHECK(m.coefficients(0) > 0.0);
  CHECK(m.std_errors(0) > 0.0);
}

TEST_CASE("penalized score vanishes at the optimum") {
  const Vector w = (Vector(3) << 0.8, -0.5, 0.0).finished();
  const auto c = exponential_cohort(400, w, 0.4, 3);
  for (double lambda : {0.0, 0.5, 10.0}) {
    const auto m = cox_fit(basic_design(c.x), c.time, c.event, lambda);
    CHECK(m.converged);
    const auto pl = cox_partial_likelihood(c.x, c.time, c.event, m.coefficients);
    CHECK((pl.gradient - lambda * m.coefficients).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(m.log_partial_likelihood == doctest::Approx(pl.value).epsilon(1e-12));
    // Standard errors come from the penalized information.
    const Matrix info = pl.information + lambda * Matrix::Identity(3, 3);
    const Vector se = info.inverse().diagonal().cwiseSqrt();
    CHECK((m.std_errors - se).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("rescaling time changes neither the fit nor the C-index") {
  const Vector w = (Vector(2) << 0.6, -0.3).finished();
  const auto c = exponential_cohort(300, w, 0.5, 4);
  const auto a = cox_fit(basic_design(c.x), c.time, c.event, 0.1);
  const Vector scaled = 3.7 * c.time;
  const auto b = cox_fit(basic_design(c.x), scaled, c.event, 0.1);
  CHECK((a.coefficients - b.coefficients).lpNorm<Eigen::Infinity>() <= 1e-12);
  const Vector r = a.risk_scores(c.x);
  CHECK(c_index(r, c.time, c.event) == c_index(r, scaled, c.event));
}

TEST_CASE("lambda=0 rejects an all-zero column, ridge accepts it") {
  Matrix x(4, 2);
  x << 1, 0, 0, 0, 2, 0, -1, 0;
  const Vector t = (Vector(4) << 1.0, 2.0, 3.0, 4.0).finished();
  CHECK_THROWS_AS(cox_fit(basic_design(x), t, {1, 1, 0, 1}, 0.0), CoxError);
  const auto m = cox_fit(basic_design(x), t, {1, 1, 0, 1}, 0.5);
  CHECK(m.coefficients(1) == 0.0);
  CHECK_THROWS_AS(cox_fit(basic_design(x), t, {0, 0, 0, 0}, 0.5), CoxError);
  CHECK_THROWS_AS(cox_fit(basic_design(x), t, {1, 1, 0, 1}, -1.0), std::invalid_argument);
}

TEST_CASE("default lambda grid") {
  const auto g = default_lambda_grid();
  REQUIRE(g.size() == 10);
  CHECK(g.front() == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(g.back() == doctest::Approx(1e2).epsilon(1e-12));
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] / g[k - 1] == doctest::Approx(std::pow(1e5, 1.0 / 9)).epsilon(1e-12));
}

TEST_CASE("one-value grid is returned as is") {
  const auto c = exponential_cohort(60, Vector::Constant(1, 0.5), 0.3, 5);
  CHECK(tune_lambda(basic_design(c.x), c.time, c.event, {0.37}, 1).lambda == 0.37);
  CHECK_THROWS_AS(tune_lambda(basic_design(c.x), c.time, c.event, {}, 1), std::invalid_argument);
}

TEST_CASE("noise-only covariates select the strongest penalty") {
  const auto grid = default_lambda_grid();
  int largest = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto c = exponential_cohort(200, Vector::Zero(5), 0.3, 100 + s);
    if (tune_lambda(basic_design(c.x), c.time, c.event, grid, s).lambda == grid.back()) ++largest;
  }
  CHECK(largest >= 16);
}

TEST_CASE("strong signal selects the weak penalty") {
  int weak = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto c = exponential_cohort(200, (Vector(2) << 1.5, -1.0).finished(), 0.3, 200 + s);
    if (tune_lambda(basic_design(c.x), c.time, c.event, {0.01, 1000.0}, s).lambda == 0.01) ++weak;
  }
  CHECK(weak >= 16);
}

TEST_CASE("C-index examples") {
  const Vector t = (Vector(3) << 1.0, 2.0, 3.0).finished();
  CHECK(c_index((Vector(3) << 3.0, 2.0, 1.0).finished(), t, {1, 1, 1}) == 1.0);
  CHECK(c_index((Vector(3) << 1.0, 2.0, 3.0).finished(), t, {1, 1, 1}) == 0.0);
  CHECK(c_index(Vector::Constant(3, 0.4), t, {1, 1, 1}) == 0.5);
  const Vector r4 = (Vector(4) << 2.0, 1.0, 3.0, 0.5).finished();
  const Vector t4 = (Vector(4) << 1.0, 2.0, 3.0, 1.5).finished();
  const Events e4{1, 1, 0, 0};
  CHECK(c_index(r4, t4, e4) == oracle::c_index(as_std(r4), as_std(t4), as_bool(e4)));
  CHECK_THROWS_AS(c_index(r4, t4, {0, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(c_index(r4, t, e4), std::invalid_argument);
}

TEST_CASE("C-index matches pair enumeration with ties and censoring") {
  Rng rng(6);
  std::uniform_int_distribution<int> small(0, 5);
  std::bernoulli_distribution b(0.6);
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = 5 + rep;
    Vector r(n), t(n);
    Events e(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      r(i) = small(rng);
      t(i) = 1 + small(rng);
      e[static_cast<std::size_t>(i)] = b(rng);
    }
    e[0] = 1;
    t(0) = 0.5;
    CHECK(c_index(r, t, e) == oracle::c_index(as_std(r), as_std(t), as_bool(e)));
  }
}

TEST_CASE("C-index ignores monotone transforms of risk") {
  const auto c = exponential_cohort(150, Vector::Constant(1, 1.0), 0.5, 7);
  const Vector r = c.x.col(0);
  const double base = c_index(r, c.time, c.event);
  CHECK(c_index(r.array().exp().matrix(), c.time, c.event) == base);
  CHECK(c_index((3.0 * r.array() - 2.0).matrix(), c.time, c.event) == base);
  CHECK(c_index(r.array().cube().matrix(), c.time, c.event) == base);
}

namespace {

CoxModel toy_model() {
  // Donor types A1, A2; recipient types a1, a2; pairs (A1,a1), (A1,a2), (A2,a2).
  CoxModel m;
  auto col = [&](ColumnKind k, std::string d, std::string r, double coef, double se, Index support = 50) {
    ColumnInfo c;
    c.kind = k;
    c.donor = std::move(d);
    c.recipient = std::move(r);
    c.support = support;
    c.name = c.donor + "|" + c.recipient;
    m.columns.push_back(c);
    m.coefficients.conservativeResize(m.coefficients.size() + 1);
    m.std_errors.conservativeResize(m.std_errors.size() + 1);
    m.coefficients(m.coefficients.size() - 1) = coef;
    m.std_errors(m.std_errors.size() - 1) = se;
  };
  col(ColumnKind::Basic, "", "", 0.7, 0.1);
  col(ColumnKind::DonorType, "A1", "", 0.1, 0.02);
  col(ColumnKind::DonorType, "A2", "", -0.3, 0.03);
  col(ColumnKind::RecipientType, "", "a1", 0.05, 0.04);
  col(ColumnKind::RecipientType, "", "a2", 0.15, 0.05);
  col(ColumnKind::Pair, "A1", "a1", 0.2, 0.05);
  col(ColumnKind::Pair, "A1", "a2", -0.4, 0.06);
  col(ColumnKind::Pair, "A2", "a2", 0.1, 0.07);
  m.converged = true;
  return m;
}

} // namespace

TEST_CASE("extracted network negates coefficients and masks missing pairs") {
  const auto net = extract_network(toy_model());
  CHECK(net.n_donors() == 2);
  CHECK(net.n_recipients() == 2);
  CHECK(net.n_observed() == 3);
  CHECK(net.edge_weight()(0, 0) == -0.2);
  CHECK(net.edge_se()(0, 0) == 0.05);
  CHECK_FALSE(net.observed(1, 0));
  CHECK(net.donor_weight()(1) == 0.3);
  CHECK(net.recipient_se()(1) == 0.05);
  CHECK_THROWS_AS(extract_network(toy_model(), 60), NetworkError);
}

TEST_CASE("substituting the raw estimates is the identity") {
  const auto m = toy_model();
  const auto s = substitute_coefficients(m, identity_refinement(extract_network(m)));
  CHECK(s.coefficients == m.coefficients);
  CHECK(s.std_errors == m.std_errors);
  CHECK(s.columns == m.columns);
}

TEST_CASE("pair substitution leaves the other blocks untouched and is linear") {
  const auto m = toy_model();
  auto refined = identity_refinement(extract_network(m));
  refined.eta(0, 0) = 1.0;
  refined.eta(1, 0) = 9.0; // no column for (A2, a1)
  const auto s = substitute_coefficients(m, refined);
  for (Index k = 0; k < 5; ++k) CHECK(s.coefficients(k) == m.coefficients(k));
  CHECK(s.coefficients(5) == -1.0);
  CHECK(s.coefficients.size() == m.coefficients.size());

  Rng rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  const Matrix x = Matrix::NullaryExpr(10, 8, [&] { return g(rng); });
  const Vector diff = s.risk_scores(x) - m.risk_scores(x);
  CHECK((diff - x * (s.coefficients - m.coefficients)).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("substitution rejects a mismatched structure") {
  auto refined = identity_refinement(extract_network(toy_model()));
  refined.donor_labels[0] = "B7";
  CHECK_THROWS_AS(substitute_coefficients(toy_model(), refined), std::invalid_argument);
}

TEST_CASE("cox model JSON round trip") {
  const auto m = toy_model();
  const auto back = cox_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.coefficients == m.coefficients);
  CHECK(back.std_errors == m.std_errors);
  CHECK(back.column_names() == m.column_names());
  CHECK(back.columns == m.columns);
}
