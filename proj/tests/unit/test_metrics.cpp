#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "compatnet/metrics.hpp"
#include "compatnet/simnet.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace compatnet;
using V = std::vector<double>;

TEST_CASE("rmse examples") {
  CHECK(rmse(V{1, 2, 3}, V{1, 2, 3}) == 0.0);
  CHECK(rmse(V{2, 3, 4}, V{1, 2, 3}) == 1.0);
  CHECK(rmse(V{0, 2}, V{0, 0}) == doctest::Approx(1.41421).epsilon(1e-5));
  CHECK_THROWS_AS(rmse(V{1}, V{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(rmse(V{}, V{}), std::invalid_argument);
}

TEST_CASE("mean log-probability examples") {
  CHECK(mean_log_prob(V{0.3, -1}, V{0.3, -1}, V{1, 1}) == doctest::Approx(-0.918939).epsilon(1e-6));
  const V se{0.5, 2.0};
  const double expected = 0.5 * ((-0.5 * std::log(2 * std::numbers::pi * 0.25) - 0.5) +
                                 (-0.5 * std::log(2 * std::numbers::pi * 4.0) - 0.5));
  CHECK(mean_log_prob(V{1.5, 2.0}, V{1.0, 0.0}, se) == doctest::Approx(expected).epsilon(1e-14));
  const V p{0.1, -2.0, 3.3}, o{0.4, -1.0, 2.0}, s{0.2, 1.5, 0.7};
  CHECK(std::abs(mean_log_prob(p, o, s) - oracle::mean_log_prob(p, o, s)) <= 1e-12);
  CHECK_THROWS_AS(mean_log_prob(V{1}, V{1}, V{0}), std::invalid_argument);
}

TEST_CASE("mean log-probability drops as one prediction moves away") {
  const V o{0.0, 1.0, 2.0}, s{1.0, 0.5, 2.0};
  double prev = INFINITY;
  for (double off = 0.0; off < 3.0; off += 0.25) {
    const double v = mean_log_prob(V{off, 1.0, 2.0}, o, s);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("sign accuracy examples") {
  CHECK(sign_accuracy(V{1, -1}, V{2, -3}) == 1.0);
  CHECK(sign_accuracy(V{1, -1}, V{-2, -3}) == 0.5);
  CHECK(sign_accuracy(V{0}, V{0.1}) == 1.0);
}

TEST_CASE("metrics are permutation invariant") {
  const V p{0.1, -2.0, 3.3, 0.0}, o{0.4, -1.0, 2.0, -0.5}, s{0.2, 1.5, 0.7, 1.0};
  const V pp{3.3, 0.0, 0.1, -2.0}, op{2.0, -0.5, 0.4, -1.0}, sp{0.7, 1.0, 0.2, 1.5};
  CHECK(rmse(p, o) == doctest::Approx(rmse(pp, op)).epsilon(1e-15));
  CHECK(mean_log_prob(p, o, s) == doctest::Approx(mean_log_prob(pp, op, sp)).epsilon(1e-15));
  CHECK(sign_accuracy(p, o) == sign_accuracy(pp, op));
}

TEST_CASE("method names round trip") {
  for (auto m : {RefineMethod::Raw, RefineMethod::Lsm, RefineMethod::Nmtf, RefineMethod::Pca})
    CHECK(refine_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(refine_method_from_string("svd"), std::invalid_argument);
}

TEST_CASE("raw self-evaluation is perfect and ignores the grid") {
  const auto net = fixture::random_network(5, 4, 0.3, 3);
  const auto a = evaluate_refinement(net, net, RefineMethod::Raw, {1, 2, 3});
  CHECK(a.selected.rmse == 0.0);
  CHECK(a.selected.sign_accuracy == 1.0);
  CHECK(a.selected.n_pairs == net.n_observed());
  const auto b = evaluate_refinement(net, net, RefineMethod::Raw, {7});
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("single-entry grid selects that entry") {
  const auto train = fixture::random_network(6, 5, 0.1, 4);
  const auto test = fixture::random_network(6, 5, 0.1, 5);
  for (auto m : {RefineMethod::Lsm, RefineMethod::Nmtf, RefineMethod::Pca}) {
    const auto e = evaluate_refinement(train, test, m, {2});
    CHECK(e.selected_dim == 2);
    REQUIRE(e.per_dim.size() == 1);
  }
}

TEST_CASE("selected dimension has the best mean log-probability") {
  const auto train = fixture::random_network(6, 6, 0.1, 6);
  const auto test = fixture::random_network(6, 6, 0.1, 7);
  const auto e = evaluate_refinement(train, test, RefineMethod::Pca, {1, 2, 3, 4});
  for (const auto& d : e.per_dim) CHECK(d.report.mean_log_prob <= e.selected.mean_log_prob);
}

TEST_CASE("networks without common pairs are rejected") {
  NetworkData a = fixture::random_network(2, 2, 0.0, 8).data();
  NetworkData b = a;
  a.edge_mask << true, false, false, false;
  b.edge_mask << false, true, true, true;
  CHECK_THROWS_AS(evaluate_refinement(CompatibilityNetwork(a), CompatibilityNetwork(b), RefineMethod::Raw, {1}),
                  NoCommonPairs);
}

TEST_CASE("refined baselines keep observed node weights") {
  const auto net = fixture::random_network(5, 5, 0.2, 9);
  for (auto m : {RefineMethod::Nmtf, RefineMethod::Pca}) {
    const auto r = refine(net, m, 2, RefineOptions{});
    CHECK(r.delta == net.donor_weight());
    CHECK(r.gamma == net.recipient_weight());
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j)
        CHECK(r.mu(i, j) == doctest::Approx(r.eta(i, j) + r.delta(i) + r.gamma(j)).epsilon(1e-13));
  }
  const auto raw = refine(net, RefineMethod::Raw, 0, RefineOptions{});
  CHECK(raw.mu == net.compatibility_matrix());
}

TEST_CASE("lsm refinement beats raw on a same-truth split") {
  SimConfig c;
  c.sigma_w = 0.5;
  c.seed = 12;
  const auto s = simulate(c);
  const auto train = s.observed;
  const auto test = observe(s.truth, c, 77);
  const auto raw = evaluate_refinement(train, test, RefineMethod::Raw, {2});
  const auto lsm = evaluate_refinement(train, test, RefineMethod::Lsm, {2});
  CHECK(lsm.selected.rmse < raw.selected.rmse);
}

TEST_CASE("eval table has every method") {
  const auto net = fixture::random_network(4, 4, 0.0, 10);
  std::vector<RefinementEvaluation> evals{evaluate_refinement(net, net, RefineMethod::Raw, {1}),
                                          evaluate_refinement(net, net, RefineMethod::Pca, {1})};
  const auto t = format_eval_table(evals);
  CHECK(t.find("raw") != std::string::npos);
  CHECK(t.find("pca") != std::string::npos);
}
