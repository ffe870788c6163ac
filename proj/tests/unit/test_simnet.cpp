#include <doctest.h>

#include <cmath>

#include "compatnet/simnet.hpp"
#include "compatnet/stats.hpp"

using namespace compatnet;

namespace {

double residual_sd(const SimulatedNetwork& sim, EdgeMeanConvention c) {
  const auto& t = sim.truth;
  double ss = 0.0;
  Index n = 0;
  for (Index i = 0; i < t.n_donors(); ++i)
    for (Index j = 0; j < t.n_recipients(); ++j) {
      const double mean = c == EdgeMeanConvention::PairTermOnly ? pair_affinity(t, i, j) : predict_compatibility(t, i, j);
      ss += std::pow(sim.observed.edge_weight()(i, j) - mean, 2);
      ++n;
    }
  return std::sqrt(ss / static_cast<double>(n - 1));
}

FitConfig replicate_fit() {
  FitConfig f;
  f.freeze_beta = true;
  f.restarts = 1;
  return f;
}

} // namespace

TEST_CASE("same seed gives an identical simulation") {
  SimConfig c;
  c.seed = 4;
  const auto a = simulate(c);
  const auto b = simulate(c);
  CHECK(a.truth == b.truth);
  CHECK(a.observed == b.observed);
  c.seed = 5;
  CHECK_FALSE(simulate(c).truth == a.truth);
}

TEST_CASE("simulated network is fully observed with the generating noise levels") {
  SimConfig c;
  c.n_d = 7;
  c.n_r = 9;
  c.sigma_w = 0.3;
  c.sigma_node = 0.2;
  const auto s = simulate(c);
  CHECK(s.observed.n_observed() == 63);
  CHECK((s.observed.edge_se().array() == 0.3).all());
  CHECK((s.observed.donor_se().array() == 0.2).all());
  CHECK((s.observed.recipient_se().array() == 0.2).all());
  CHECK(s.truth.alpha == c.alpha);
  CHECK(s.truth.beta == c.beta);
}

TEST_CASE("edge noise has the configured spread") {
  for (auto conv : {EdgeMeanConvention::PairTermOnly, EdgeMeanConvention::FullCompatibility}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      SimConfig c;
      c.seed = 40 + s;
      c.edge_mean_convention = conv;
      const double sd = residual_sd(simulate(c), conv);
      CHECK(sd >= 0.8 * 0.15);
      CHECK(sd <= 1.2 * 0.15);
    }
  }
}

TEST_CASE("vanishing noise reproduces the true means") {
  SimConfig c;
  c.sigma_w = 1e-12;
  c.sigma_node = 1e-12;
  c.edge_mean_convention = EdgeMeanConvention::FullCompatibility;
  const auto s = simulate(c);
  for (Index i = 0; i < c.n_d; ++i) {
    CHECK(std::abs(s.observed.donor_weight()(i) - s.truth.delta(i)) <= 1e-9);
    for (Index j = 0; j < c.n_r; ++j)
      CHECK(std::abs(s.observed.edge_weight()(i, j) - predict_compatibility(s.truth, i, j)) <= 1e-9);
  }
}

TEST_CASE("fresh observations share the truth") {
  SimConfig c;
  const auto s = simulate(c);
  const auto a = observe(s.truth, c, 1);
  const auto b = observe(s.truth, c, 2);
  CHECK(a == observe(s.truth, c, 1));
  CHECK_FALSE(a == b);
  CHECK(a.donor_labels() == s.observed.donor_labels());
}

TEST_CASE("config validation") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  c.sigma_w = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.n_d = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.pos_std = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("convention names round trip") {
  for (auto conv : {EdgeMeanConvention::PairTermOnly, EdgeMeanConvention::FullCompatibility})
    CHECK(edge_mean_convention_from_string(to_string(conv)) == conv);
  CHECK_THROWS_AS(edge_mean_convention_from_string("edge"), std::invalid_argument);
  CHECK(edge_mean_convention_from_string("full") == EdgeMeanConvention::FullCompatibility);
}

TEST_CASE("sim config survives JSON") {
  SimConfig c;
  c.n_d = 3;
  c.sigma_w = 1.5;
  c.edge_mean_convention = EdgeMeanConvention::FullCompatibility;
  c.seed = 99;
  const auto d = sim_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(to_json(d) == to_json(c));
  const auto f = fit_config_from_json(to_json(replicate_fit()));
  CHECK(f.freeze_beta);
  CHECK(f.restarts == 1);
}

TEST_CASE("a single replicate reports zero standard errors") {
  const auto r = run_replicates(SimConfig{}, replicate_fit(), 1);
  CHECK(r.n_reps == 1);
  CHECK(r.n_failed == 0);
  for (const auto& row : table1_rmse_rows()) CHECK(r.rmse.at(row).se == 0.0);
  for (const auto& row : table1_r2_rows()) CHECK(r.r2.at(row).se == 0.0);
}

TEST_CASE("low-noise replicates sit near the noise floor") {
  const auto r = run_replicates(SimConfig{}, replicate_fit(), 3);
  CHECK(r.rmse.at("w").mean < 1.1 * 0.15);
  for (const auto& rep : r.replicates) {
    CHECK(rep.ok);
    for (const auto& [name, v] : rep.r2) CHECK(v <= 1.0 + 1e-12);
  }
  const auto again = run_replicates(SimConfig{}, replicate_fit(), 3);
  CHECK(to_json(again) == to_json(r));
}

TEST_CASE("table layout lists every row") {
  const auto r = run_replicates(SimConfig{}, replicate_fit(), 1);
  const auto text = format_table1({{"low", &r}});
  for (const auto& row : table1_rmse_rows()) CHECK(text.find(row) != std::string::npos);
  CHECK(text.find("low") != std::string::npos);
}
