#include "compatnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "compatnet/parallel.hpp"
#include "compatnet/rng.hpp"
#include "compatnet/stats.hpp"

namespace compatnet {

void PipelineConfig::validate() const {
  if (min_count < 1) throw std::invalid_argument("pipeline: min_count must be >= 1");
  if (lambda_grid.empty()) throw std::invalid_argument("pipeline: lambda grid is empty");
  for (double l : lambda_grid)
    if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("pipeline: lambda values must be >= 0");
  for (auto m : methods) {
    if (m == RefineMethod::Raw) throw std::invalid_argument("pipeline: raw is always evaluated; do not list it");
    const auto& dims = dims_for(m);
    if (dims.empty()) throw std::invalid_argument(std::string("pipeline: empty dimension grid for ") + to_string(m));
    for (Index d : dims)
      if (d < 1) throw std::invalid_argument("pipeline: dimensions must be >= 1");
  }
  lsm.validate();
}

const std::vector<Index>& PipelineConfig::dims_for(RefineMethod m) const {
  switch (m) {
    case RefineMethod::Lsm: return lsm_dims;
    case RefineMethod::Nmtf: return nmtf_dims;
    case RefineMethod::Pca: return pca_dims;
    case RefineMethod::Raw: break;
  }
  static const std::vector<Index> none;
  return none;
}

const MethodOutcome* PipelineResult::find(RefineMethod m) const {
  for (const auto& o : methods)
    if (o.method == m) return &o;
  return nullptr;
}

namespace {

double censored_fraction(const TransplantDataset& d) {
  const auto events = std::count_if(d.event.begin(), d.event.end(), [](auto e) { return e != 0; });
  return 1.0 - static_cast<double>(events) / static_cast<double>(d.size());
}

double test_c_index(const CoxModel& model, const DesignMatrix& test_design, const TransplantDataset& test) {
  return c_index(model.risk_scores(test_design.x), test.time, test.event);
}

} // namespace

PipelineResult run_pipeline(const TransplantDataset& train, const TransplantDataset& test,
                            const PipelineConfig& config, std::uint64_t seed) {
  config.validate();
  train.validate();
  test.validate();

  PipelineResult out;
  out.seed = seed;
  out.train_censored = censored_fraction(train);
  out.test_censored = censored_fraction(test);

  const DesignMatrix design = design_matrix(train, config.min_count);
  const auto selection = tune_lambda(design, train.time, train.event, config.lambda_grid, stream_seed(seed, "folds"));
  out.lambda = selection.lambda;
  const CoxModel model = cox_fit(design, train.time, train.event, out.lambda);
  out.cox_converged = model.converged;
  out.n_columns = static_cast<Index>(model.columns.size());

  const CompatibilityNetwork network = extract_network(model, config.min_count);
  out.n_observed_pairs = network.n_observed();

  const DesignMatrix test_design = apply_design(test, design.columns);
  out.raw_c_index = test_c_index(model, test_design, test);

  // Held-out network for dimension selection, only built when needed.
  std::optional<CompatibilityNetwork> test_network;
  auto held_out = [&]() -> const CompatibilityNetwork& {
    if (!test_network) {
      const CoxModel test_model = cox_fit(test_design, test.time, test.event, out.lambda);
      test_network.emplace(extract_network(test_model, config.min_count));
    }
    return *test_network;
  };

  RefineOptions options;
  options.lsm = config.lsm;
  options.lsm.seed = stream_seed(seed, "pipeline-lsm");
  options.nmtf = config.nmtf;
  options.nmtf.seed = stream_seed(seed, "pipeline-nmtf");
  options.scale = config.scale;

  for (const RefineMethod method : config.methods) {
    MethodOutcome o;
    o.method = method;
    RefinedNetwork refined;
    if (config.identity_refinement) {
      refined = identity_refinement(network);
    } else {
      const auto& dims = config.dims_for(method);
      o.dim = dims.front();
      if (dims.size() > 1) {
        o.selection = evaluate_refinement(network, held_out(), method, dims, options);
        o.dim = o.selection->selected_dim;
      }
      if (method == RefineMethod::Lsm) {
        FitConfig fc = options.lsm;
        fc.dim = o.dim;
        const auto fitted = fit(network, fc);
        o.converged = fitted.converged;
        refined = refine_network(network, fitted);
      } else {
        refined = refine(network, method, o.dim, options);
      }
    }
    const CoxModel substituted = substitute_coefficients(model, refined);
    o.c_index = test_c_index(substituted, test_design, test);
    o.delta_c_index = o.c_index - out.raw_c_index;
    out.methods.push_back(std::move(o));
  }
  return out;
}

PipelineResult pipeline_end_to_end(const TransplantGenConfig& gen, const PipelineConfig& config) {
  const auto sim = simulate_transplants(gen);
  return run_pipeline(sim.train, sim.test, config, gen.seed);
}

namespace {

template <class RunSeed>
PipelineBatch run_batch(const PipelineConfig& config, int n_seeds, std::uint64_t seed, int threads, RunSeed&& run_seed) {
  if (n_seeds < 1) throw std::invalid_argument("pipeline: number of seeds must be >= 1");
  config.validate();
  PipelineBatch batch;
  batch.config = config;
  batch.seeds.resize(static_cast<std::size_t>(n_seeds));

  PipelineConfig per_seed = config;
  per_seed.lsm.threads = 1;
  parallel_for(batch.seeds.size(), threads, [&](std::size_t s) {
    auto& slot = batch.seeds[s];
    slot.seed = seed + s;
    try {
      slot.result = run_seed(slot.seed, per_seed);
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  std::vector<double> raw;
  for (const auto& s : batch.seeds) {
    if (s.result) raw.push_back(s.result->raw_c_index);
    else ++batch.n_failed;
  }
  if (!raw.empty()) batch.median_raw_c_index = median(raw);

  for (const RefineMethod m : config.methods) {
    MethodSummary sum;
    sum.method = m;
    std::vector<double> deltas, abs_deltas;
    for (const auto& s : batch.seeds) {
      if (!s.result) continue;
      if (const auto* o = s.result->find(m)) {
        deltas.push_back(o->delta_c_index);
        abs_deltas.push_back(std::abs(o->delta_c_index));
      }
    }
    sum.n = static_cast<int>(deltas.size());
    if (!deltas.empty()) {
      sum.median_delta = median(deltas);
      sum.median_abs_delta = median(abs_deltas);
      sum.mean_delta = mean(deltas);
      const auto improved = std::count_if(deltas.begin(), deltas.end(), [](double d) { return d > 0.0; });
      sum.fraction_improved = static_cast<double>(improved) / static_cast<double>(deltas.size());
    }
    batch.summary.push_back(sum);
  }
  return batch;
}

} // namespace

PipelineBatch run_pipeline_batch(const TransplantGenConfig& gen, const PipelineConfig& config, int n_seeds,
                                 int threads) {
  gen.validate();
  auto batch = run_batch(config, n_seeds, gen.seed, threads, [&](std::uint64_t seed, const PipelineConfig& c) {
    TransplantGenConfig g = gen;
    g.seed = seed;
    return pipeline_end_to_end(g, c);
  });
  batch.gen = gen;
  return batch;
}

PipelineBatch run_pipeline_batch(const TransplantDataset& data, const std::optional<TransplantDataset>& test,
                                 const PipelineConfig& config, int n_seeds, std::uint64_t seed, int threads) {
  data.validate();
  if (test) test->validate();
  return run_batch(config, n_seeds, seed, threads, [&](std::uint64_t s, const PipelineConfig& c) {
    if (test) return run_pipeline(data, *test, c, s);
    std::vector<Index> perm(static_cast<std::size_t>(data.size()));
    std::iota(perm.begin(), perm.end(), Index{0});
    auto rng = make_rng(s, "data-split");
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto half = perm.begin() + static_cast<std::ptrdiff_t>(perm.size() / 2);
    std::vector<Index> a(perm.begin(), half), b(half, perm.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return run_pipeline(data.subset(a), data.subset(b), c, s);
  });
}

namespace {

const char* scale_name(EvalScale s) { return s == EvalScale::Compatibility ? "compatibility" : "pair_term"; }

EvalScale scale_from(const std::string& s) {
  if (s == "compatibility") return EvalScale::Compatibility;
  if (s == "pair_term") return EvalScale::PairTerm;
  throw std::invalid_argument("unknown evaluation scale '" + s + "'");
}

} // namespace

nlohmann::json to_json(const PipelineConfig& c) {
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.emplace_back(to_string(m));
  return {{"min_count", c.min_count},
          {"lambda_grid", c.lambda_grid},
          {"lsm", to_json(c.lsm)},
          {"nmtf", {{"max_iter", c.nmtf.max_iter}, {"tol", c.nmtf.tol}}},
          {"lsm_dims", c.lsm_dims},
          {"nmtf_dims", c.nmtf_dims},
          {"pca_dims", c.pca_dims},
          {"methods", methods},
          {"scale", scale_name(c.scale)},
          {"identity_refinement", c.identity_refinement}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.min_count = j.value("min_count", c.min_count);
  c.lambda_grid = j.value("lambda_grid", c.lambda_grid);
  if (j.contains("lsm")) c.lsm = fit_config_from_json(j.at("lsm"));
  if (j.contains("nmtf")) {
    c.nmtf.max_iter = j.at("nmtf").value("max_iter", c.nmtf.max_iter);
    c.nmtf.tol = j.at("nmtf").value("tol", c.nmtf.tol);
  }
  c.lsm_dims = j.value("lsm_dims", c.lsm_dims);
  c.nmtf_dims = j.value("nmtf_dims", c.nmtf_dims);
  c.pca_dims = j.value("pca_dims", c.pca_dims);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(refine_method_from_string(m.get<std::string>()));
  }
  if (j.contains("scale")) c.scale = scale_from(j.at("scale").get<std::string>());
  c.identity_refinement = j.value("identity_refinement", c.identity_refinement);
  return c;
}

nlohmann::json to_json(const PipelineResult& r) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& o : r.methods) {
    nlohmann::json m{{"method", to_string(o.method)},
                     {"dim", o.dim},
                     {"c_index", o.c_index},
                     {"delta_c_index", o.delta_c_index},
                     {"converged", o.converged}};
    if (o.selection) m["selection"] = to_json(*o.selection);
    methods.push_back(std::move(m));
  }
  return {{"seed", r.seed},
          {"lambda", r.lambda},
          {"cox_converged", r.cox_converged},
          {"n_columns", r.n_columns},
          {"n_observed_pairs", r.n_observed_pairs},
          {"train_censored", r.train_censored},
          {"test_censored", r.test_censored},
          {"raw_c_index", r.raw_c_index},
          {"methods", std::move(methods)}};
}

nlohmann::json to_json(const PipelineBatch& b) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : b.seeds) {
    if (s.result) seeds.push_back(to_json(*s.result));
    else seeds.push_back({{"seed", s.seed}, {"error", s.error}});
  }
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& m : b.summary) {
    summary[to_string(m.method)] = {{"n", m.n},
                                    {"median_delta_c_index", m.median_delta},
                                    {"median_abs_delta_c_index", m.median_abs_delta},
                                    {"mean_delta_c_index", m.mean_delta},
                                    {"fraction_improved", m.fraction_improved}};
  }
  nlohmann::json out{{"config", to_json(b.config)},
          {"n_seeds", b.seeds.size()},
          {"n_failed", b.n_failed},
          {"median_raw_c_index", b.median_raw_c_index},
          {"summary", std::move(summary)},
          {"seeds", std::move(seeds)}};
  if (b.gen) out["generator"] = to_json(*b.gen);
  return out;
}

std::string format_pipeline_table(const PipelineBatch& b) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "seeds: %zu (failed %d)  median raw C-index: %.4f\n", b.seeds.size(), b.n_failed,
                b.median_raw_c_index);
  os << line;
  std::snprintf(line, sizeof line, "%-8s %6s %14s %14s %14s %10s\n", "method", "n", "median dC", "median |dC|",
                "mean dC", "improved");
  os << line;
  for (const auto& m : b.summary) {
    std::snprintf(line, sizeof line, "%-8s %6d %+14.5f %14.5f %+14.5f %9.0f%%\n", to_string(m.method), m.n,
                  m.median_delta, m.median_abs_delta, m.mean_delta, 100.0 * m.fraction_improved);
    os << line;
  }
  return os.str();
}

} // namespace compatnet
