#include "compatnet/simnet.hpp"

#include <cstdio>
#include <sstream>

#include "compatnet/parallel.hpp"
#include "compatnet/procrustes.hpp"
#include "compatnet/rng.hpp"
#include "compatnet/stats.hpp"

namespace compatnet {

const char* to_string(EdgeMeanConvention c) {
  return c == EdgeMeanConvention::PairTermOnly ? "pair_term_only" : "full_compatibility";
}

EdgeMeanConvention edge_mean_convention_from_string(const std::string& s) {
  if (s == "pair_term_only" || s == "pair") return EdgeMeanConvention::PairTermOnly;
  if (s == "full_compatibility" || s == "full") return EdgeMeanConvention::FullCompatibility;
  throw std::invalid_argument("unknown edge mean convention '" + s + "'");
}

void SimConfig::validate() const {
  if (n_d < 1 || n_r < 1) throw std::invalid_argument("SimConfig: node counts must be >= 1");
  if (dim < 1) throw std::invalid_argument("SimConfig: dim must be >= 1");
  if (!(pos_std > 0.0) || !(effect_std > 0.0) || !(sigma_w > 0.0) || !(sigma_node > 0.0))
    throw std::invalid_argument("SimConfig: standard deviations must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("SimConfig: beta must be > 0");
}

namespace {

LsmParams sample_truth(const SimConfig& c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  LsmParams t;
  t.z_d.resize(c.n_d, c.dim);
  t.z_r.resize(c.n_r, c.dim);
  for (Index i = 0; i < c.n_d; ++i)
    for (Index k = 0; k < c.dim; ++k) t.z_d(i, k) = c.pos_std * normal(rng);
  for (Index j = 0; j < c.n_r; ++j)
    for (Index k = 0; k < c.dim; ++k) t.z_r(j, k) = c.pos_std * normal(rng);
  t.delta.resize(c.n_d);
  t.gamma.resize(c.n_r);
  for (Index i = 0; i < c.n_d; ++i) t.delta(i) = c.effect_std * normal(rng);
  for (Index j = 0; j < c.n_r; ++j) t.gamma(j) = c.effect_std * normal(rng);
  t.alpha = c.alpha;
  t.beta = c.beta;
  return t;
}

CompatibilityNetwork draw_observations(const LsmParams& truth, const SimConfig& c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index nd = truth.n_donors(), nr = truth.n_recipients();
  NetworkData data;
  for (Index i = 0; i < nd; ++i) data.donor_labels.push_back("D" + std::to_string(i + 1));
  for (Index j = 0; j < nr; ++j) data.recipient_labels.push_back("r" + std::to_string(j + 1));
  data.edge_weight.resize(nd, nr);
  for (Index i = 0; i < nd; ++i) {
    for (Index j = 0; j < nr; ++j) {
      const double mean = c.edge_mean_convention == EdgeMeanConvention::PairTermOnly
                              ? pair_affinity(truth, i, j)
                              : predict_compatibility(truth, i, j);
      data.edge_weight(i, j) = mean + c.sigma_w * normal(rng);
    }
  }
  data.donor_weight.resize(nd);
  data.recipient_weight.resize(nr);
  for (Index i = 0; i < nd; ++i) data.donor_weight(i) = truth.delta(i) + c.sigma_node * normal(rng);
  for (Index j = 0; j < nr; ++j) data.recipient_weight(j) = truth.gamma(j) + c.sigma_node * normal(rng);
  data.edge_se = Matrix::Constant(nd, nr, c.sigma_w);
  data.edge_mask = Mask::Constant(nd, nr, true);
  data.donor_se = Vector::Constant(nd, c.sigma_node);
  data.recipient_se = Vector::Constant(nr, c.sigma_node);
  return CompatibilityNetwork(std::move(data));
}

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

SimulatedNetwork simulate(const SimConfig& config) {
  config.validate();
  auto rng = make_rng(config.seed, "simulate");
  auto truth = sample_truth(config, rng);
  auto observed = draw_observations(truth, config, rng);
  return {std::move(truth), std::move(observed)};
}

CompatibilityNetwork observe(const LsmParams& truth, const SimConfig& config, std::uint64_t noise_seed) {
  config.validate();
  auto rng = make_rng(noise_seed, "observe");
  return draw_observations(truth, config, rng);
}

ReplicateMetrics score_fit(const SimulatedNetwork& sim, const FitResult& fit, EdgeMeanConvention convention) {
  const auto& truth = sim.truth;
  const auto& est = fit.params;
  const auto& net = sim.observed;
  ReplicateMetrics m;
  m.ok = true;
  m.converged = fit.converged;
  m.log_likelihood = fit.log_likelihood;

  const auto refined = refine_network(net, fit);
  const Matrix& predicted = convention == EdgeMeanConvention::PairTermOnly ? refined.eta : refined.mu;
  std::vector<double> pred, obs;
  for (const auto& p : observed_pairs(net)) {
    pred.push_back(predicted(p.donor_index, p.recipient_index));
    obs.push_back(net.edge_weight()(p.donor_index, p.recipient_index));
  }
  const Eigen::Map<const Vector> pv(pred.data(), static_cast<Index>(pred.size()));
  const Eigen::Map<const Vector> ov(obs.data(), static_cast<Index>(obs.size()));
  m.rmse["w"] = rmse(pv, ov);
  m.r2["w"] = r_squared(pred, obs);

  const Index nd = truth.n_donors(), nr = truth.n_recipients(), dim = truth.dim();
  Matrix source(nd + nr, dim), target(nd + nr, dim);
  source << est.z_d, est.z_r;
  target << truth.z_d, truth.z_r;
  const auto aligned = procrustes_align(source, target).aligned;
  m.rmse["z_d"] = rmse(aligned.topRows(nd), truth.z_d);
  m.rmse["z_r"] = rmse(aligned.bottomRows(nr), truth.z_r);
  m.r2["z_d"] = r_squared(Matrix(aligned.topRows(nd)), truth.z_d);
  m.r2["z_r"] = r_squared(Matrix(aligned.bottomRows(nr)), truth.z_r);

  m.rmse["delta"] = rmse(est.delta, truth.delta);
  m.rmse["gamma"] = rmse(est.gamma, truth.gamma);
  m.r2["delta"] = r_squared(as_std(est.delta), as_std(truth.delta));
  m.r2["gamma"] = r_squared(as_std(est.gamma), as_std(truth.gamma));
  m.rmse["alpha"] = std::abs(est.alpha - truth.alpha);
  return m;
}

ReplicateReport run_replicates(const SimConfig& config, const FitConfig& fit_config, int n_reps) {
  if (n_reps < 1) throw std::invalid_argument("run_replicates: n_reps must be >= 1");
  config.validate();
  fit_config.validate();
  if (fit_config.dim != config.dim)
    throw std::invalid_argument("run_replicates: fit dimension must equal the simulated dimension");

  ReplicateReport report;
  report.config = config;
  report.fit_config = fit_config;
  report.n_reps = n_reps;
  report.replicates.resize(static_cast<std::size_t>(n_reps));

  parallel_for(report.replicates.size(), fit_config.threads, [&](std::size_t r) {
    SimConfig sc = config;
    sc.seed = config.seed + r;
    FitConfig fc = fit_config;
    fc.seed = stream_seed(fit_config.seed, "replicate", r);
    fc.threads = 1;
    try {
      const auto sim = simulate(sc);
      const auto result = fit(sim.observed, fc);
      report.replicates[r] = score_fit(sim, result, config.edge_mean_convention);
    } catch (const std::exception& e) {
      report.replicates[r].ok = false;
      report.replicates[r].error = e.what();
    }
  });

  std::map<std::string, std::vector<double>> rmse_vals, r2_vals;
  for (const auto& m : report.replicates) {
    if (!m.ok) {
      ++report.n_failed;
      continue;
    }
    for (const auto& [k, v] : m.rmse) rmse_vals[k].push_back(v);
    for (const auto& [k, v] : m.r2) r2_vals[k].push_back(v);
  }
  for (const auto& [k, v] : rmse_vals) report.rmse[k] = {mean(v), standard_error(v)};
  for (const auto& [k, v] : r2_vals) report.r2[k] = {mean(v), standard_error(v)};
  return report;
}

nlohmann::json to_json(const SimConfig& c) {
  return {{"n_d", c.n_d},
          {"n_r", c.n_r},
          {"dim", c.dim},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"pos_std", c.pos_std},
          {"effect_std", c.effect_std},
          {"sigma_w", c.sigma_w},
          {"sigma_node", c.sigma_node},
          {"edge_mean_convention", to_string(c.edge_mean_convention)},
          {"seed", c.seed}};
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  c.n_d = j.value("n_d", c.n_d);
  c.n_r = j.value("n_r", c.n_r);
  c.dim = j.value("dim", c.dim);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.pos_std = j.value("pos_std", c.pos_std);
  c.effect_std = j.value("effect_std", c.effect_std);
  c.sigma_w = j.value("sigma_w", c.sigma_w);
  c.sigma_node = j.value("sigma_node", c.sigma_node);
  if (j.contains("edge_mean_convention"))
    c.edge_mean_convention = edge_mean_convention_from_string(j.at("edge_mean_convention").get<std::string>());
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json to_json(const FitConfig& c) {
  return {{"dim", c.dim},         {"max_iter", c.max_iter},       {"grad_tol", c.grad_tol},
          {"restarts", c.restarts}, {"seed", c.seed}, {"freeze_beta", c.freeze_beta}};
}

FitConfig fit_config_from_json(const nlohmann::json& j) {
  FitConfig c;
  c.dim = j.value("dim", c.dim);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.restarts = j.value("restarts", c.restarts);
  c.seed = j.value("seed", c.seed);
  c.freeze_beta = j.value("freeze_beta", c.freeze_beta);
  return c;
}

nlohmann::json to_json(const ReplicateReport& r) {
  nlohmann::json j;
  j["sim_config"] = to_json(r.config);
  j["fit_config"] = to_json(r.fit_config);
  j["n_reps"] = r.n_reps;
  j["n_failed"] = r.n_failed;
  for (const auto& [k, s] : r.rmse) j["rmse"][k] = {{"mean", s.mean}, {"se", s.se}};
  for (const auto& [k, s] : r.r2) j["r2"][k] = {{"mean", s.mean}, {"se", s.se}};
  auto reps = nlohmann::json::array();
  for (const auto& m : r.replicates) {
    nlohmann::json e{{"ok", m.ok}};
    if (m.ok) {
      e["converged"] = m.converged;
      e["log_likelihood"] = m.log_likelihood;
      e["rmse"] = m.rmse;
      e["r2"] = m.r2;
    } else {
      e["error"] = m.error;
    }
    reps.push_back(std::move(e));
  }
  j["replicates"] = std::move(reps);
  return j;
}

std::string format_table1(const std::vector<std::pair<std::string, const ReplicateReport*>>& columns) {
  std::ostringstream os;
  char buf[64];
  auto cell = [&](const std::map<std::string, SummaryStat>& block, const std::string& key) {
    const auto it = block.find(key);
    if (it == block.end()) return std::string("n/a");
    std::snprintf(buf, sizeof(buf), "%.3f +- %.3f", it->second.mean, it->second.se);
    return std::string(buf);
  };
  std::snprintf(buf, sizeof(buf), "%-6s %-8s", "", "param");
  os << buf;
  for (const auto& [label, _] : columns) {
    std::snprintf(buf, sizeof(buf), " %22s", label.c_str());
    os << buf;
  }
  os << '\n';
  auto block = [&](const char* name, const std::vector<std::string>& rows, bool is_rmse) {
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof(buf), "%-6s %-8s", row == rows.front() ? name : "", row.c_str());
      os << buf;
      for (const auto& [_, report] : columns) {
        std::snprintf(buf, sizeof(buf), " %22s", cell(is_rmse ? report->rmse : report->r2, row).c_str());
        os << buf;
      }
      os << '\n';
    }
  };
  block("RMSE", table1_rmse_rows(), true);
  block("R2", table1_r2_rows(), false);
  return os.str();
}

} // namespace compatnet
