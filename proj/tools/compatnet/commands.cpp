#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include "compatnet/baselines.hpp"
#include "compatnet/io.hpp"
#include "compatnet/lsm.hpp"
#include "compatnet/metrics.hpp"
#include "compatnet/network.hpp"
#include "compatnet/pipeline.hpp"
#include "compatnet/simnet.hpp"
#include "compatnet/survival.hpp"
#include "compatnet/transplant.hpp"

namespace compatnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string absolute_or_empty(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(std::move(row));
  }
  return rows;
}

json refined_json(const RefinedNetwork& r) {
  return {{"donor_labels", r.donor_labels}, {"recipient_labels", r.recipient_labels},
          {"delta", vector_json(r.delta)},  {"gamma", vector_json(r.gamma)},
          {"eta", matrix_json(r.eta)},      {"mu", matrix_json(r.mu)}};
}

std::string refined_csv(const CompatibilityNetwork& net, const RefinedNetwork& r) {
  std::string out = "donor,recipient,observed,mu,eta\n";
  for (Index i = 0; i < r.eta.rows(); ++i)
    for (Index j = 0; j < r.eta.cols(); ++j)
      out += r.donor_labels[static_cast<std::size_t>(i)] + ',' + r.recipient_labels[static_cast<std::size_t>(j)] +
             ',' + (net.edge_mask()(i, j) ? "1" : "0") + ',' + io::format_double(r.mu(i, j)) + ',' +
             io::format_double(r.eta(i, j)) + '\n';
  return out;
}

json nmtf_json(const NmtfConfig& c) { return {{"max_iter", c.max_iter}, {"tol", c.tol}}; }

NmtfConfig nmtf_from_json(const json& j, NmtfConfig c) {
  c.max_iter = j.value("max_iter", c.max_iter);
  c.tol = j.value("tol", c.tol);
  return c;
}

EvalScale parse_scale(const std::string& s) {
  if (s == "compatibility") return EvalScale::Compatibility;
  if (s == "pair_term") return EvalScale::PairTerm;
  throw UsageError("scale must be 'compatibility' or 'pair_term', got '" + s + "'");
}

RefineMethod parse_method(const std::string& s) {
  try {
    return refine_method_from_string(s);
  } catch (const std::invalid_argument&) {
    throw UsageError("unknown method '" + s + "' (expected raw, lsm, nmtf or pca)");
  }
}

CompatibilityNetwork load_network_dir(const std::string& dir, const char* flag) {
  if (dir.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_directory(dir)) throw UsageError(std::string(flag) + ": not a directory: " + dir);
  return load_network(dir);
}

TransplantDataset load_dataset_file(const std::string& path, const char* flag) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + ": no such file: " + path);
  return load_dataset(path);
}

void check_dims(const std::vector<Index>& dims, const CompatibilityNetwork& net) {
  if (dims.empty()) throw UsageError("dimension grid is empty");
  const Index max_dim = std::min(net.n_donors(), net.n_recipients());
  for (Index d : dims)
    if (d < 1 || d > max_dim)
      throw UsageError("dimension " + std::to_string(d) + " outside [1, " + std::to_string(max_dim) + "]");
}

void add_lsm_flags(CLI::App& sub, FitConfig& c) {
  sub.add_option("--restarts", c.restarts, "Random restarts beyond the MDS start");
  sub.add_option("--max-iter", c.max_iter, "L-BFGS iteration limit");
  sub.add_option("--grad-tol", c.grad_tol, "Gradient infinity-norm tolerance");
  sub.add_flag("--freeze-beta,!--free-beta", c.freeze_beta, "Hold beta at its starting value of 1");
}

// ---------------------------------------------------------------- simulate-network

class SimulateNetwork final : public Command {
public:
  std::string name() const override { return "simulate-network"; }
  std::string description() const override { return "Simulate a latent-space compatibility network"; }

  void add_flags(CLI::App& sub) override {
    sub.add_option("--n-donors", cfg_.n_d, "Donor node count");
    sub.add_option("--n-recipients", cfg_.n_r, "Recipient node count");
    sub.add_option("--dim", cfg_.dim, "Latent dimension");
    sub.add_option("--alpha", cfg_.alpha, "Affinity intercept");
    sub.add_option("--beta", cfg_.beta, "Distance slope");
    sub.add_option("--pos-std", cfg_.pos_std, "Latent position standard deviation");
    sub.add_option("--effect-std", cfg_.effect_std, "Node effect standard deviation");
    sub.add_option("--sigma-w", cfg_.sigma_w, "Edge observation noise");
    sub.add_option("--sigma-node", cfg_.sigma_node, "Node observation noise");
    sub.add_option("--convention", convention_, "pair_term_only or full_compatibility");
  }
  void finalize() override {
    if (!convention_.empty()) {
      try {
        cfg_.edge_mean_convention = edge_mean_convention_from_string(convention_);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  }
  void load(const json& j) override { cfg_ = sim_config_from_json(j); }
  json config() const override { return to_json(cfg_); }
  std::uint64_t seed() const override { return cfg_.seed; }
  void set_seed(std::uint64_t s) override { cfg_.seed = s; }

  int run(RunContext& ctx, int) override {
    const auto sim = simulate(cfg_);
    save_network(sim.observed, ctx.out_dir());
    for (const char* f : {"edges.csv", "donor_nodes.csv", "recipient_nodes.csv"}) ctx.add_artifact(f);
    json truth = to_json(sim.truth);
    truth["donor_labels"] = sim.observed.donor_labels();
    truth["recipient_labels"] = sim.observed.recipient_labels();
    truth["edge_mean_convention"] = to_string(cfg_.edge_mean_convention);
    ctx.write_json("truth.json", truth);
    std::cout << "simulated " << cfg_.n_d << " x " << cfg_.n_r << " network (sigma_w " << cfg_.sigma_w << ") in "
              << ctx.out_dir().string() << "\n";
    return kExitOk;
  }

private:
  SimConfig cfg_;
  std::string convention_;
};

// ---------------------------------------------------------------- simulate-transplants

void add_generator_flags(CLI::App& sub, TransplantGenConfig& g) {
  sub.add_option("--n-per-split", g.n_per_split, "Subjects per split");
  sub.add_option("--donor-types", g.n_donor_types, "Donor type count");
  sub.add_option("--recipient-types", g.n_recipient_types, "Recipient type count");
  sub.add_option("--basic", g.n_basic, "Basic covariate count");
  sub.add_option("--latent-dim", g.latent.dim, "Dimension of the planted latent space");
  sub.add_option("--effect-scale", g.effect_scale, "Multiplier on planted compatibilities");
  sub.add_option("--basic-coef-std", g.basic_coef_std, "Standard deviation of basic coefficients");
  sub.add_option("--baseline-hazard", g.baseline_hazard, "Exponential baseline hazard");
  sub.add_option("--censor-fraction", g.censor_fraction, "Target censored fraction");
  sub.add_flag("--no-structure", g.destroy_structure, "Permute pair effects (negative control)");
}

class SimulateTransplants final : public Command {
public:
  std::string name() const override { return "simulate-transplants"; }
  std::string description() const override { return "Simulate train/test transplant cohorts"; }
  void add_flags(CLI::App& sub) override { add_generator_flags(sub, gen_); }
  void load(const json& j) override { gen_ = transplant_config_from_json(j); }
  json config() const override { return to_json(gen_); }
  std::uint64_t seed() const override { return gen_.seed; }
  void set_seed(std::uint64_t s) override { gen_.seed = s; }

  int run(RunContext& ctx, int) override {
    const auto sim = simulate_transplants(gen_);
    save_dataset(sim.train, ctx.path("train.csv"));
    ctx.add_artifact("train.csv");
    save_dataset(sim.test, ctx.path("test.csv"));
    ctx.add_artifact("test.csv");
    ctx.write_json("truth.json", to_json(sim.truth));
    auto censored = [](const TransplantDataset& d) {
      double e = 0;
      for (auto v : d.event) e += v;
      return 1.0 - e / static_cast<double>(d.size());
    };
    std::cout << "train: " << sim.train.size() << " subjects, " << 100.0 * censored(sim.train) << "% censored\n"
              << "test:  " << sim.test.size() << " subjects, " << 100.0 * censored(sim.test) << "% censored\n";
    return kExitOk;
  }

private:
  TransplantGenConfig gen_;
};

// ---------------------------------------------------------------- fit

class Fit final : public Command {
public:
  std::string name() const override { return "fit"; }
  std::string description() const override { return "Refine a network with one method"; }

  void add_flags(CLI::App& sub) override {
    sub.add_option("--network", network_, "Directory with edges.csv, donor_nodes.csv, recipient_nodes.csv");
    sub.add_option("--test", test_, "Held-out network directory used for scoring (default: the input network)");
    sub.add_option("--method", method_, "raw, lsm, nmtf or pca");
    sub.add_option("--dim", dim_flag_, "Latent dimension or rank");
    sub.add_option("--dim-grid", dim_grid_flag_, "Comma-separated dimensions; best mean log-probability wins")
        ->delimiter(',');
    sub.add_option("--scale", scale_, "Baseline scale: compatibility or pair_term");
    sub.add_option("--nmtf-max-iter", nmtf_.max_iter, "NMTF sweep limit");
    add_lsm_flags(sub, lsm_);
  }
  void finalize() override {
    if (dim_flag_ && !dim_grid_flag_.empty()) throw UsageError("--dim and --dim-grid are mutually exclusive");
    if (dim_flag_) dims_ = {*dim_flag_};
    if (!dim_grid_flag_.empty()) dims_ = dim_grid_flag_;
  }
  void load(const json& j) override {
    network_ = j.value("network", network_);
    test_ = j.value("test", test_);
    method_ = j.value("method", method_);
    dims_ = j.value("dims", dims_);
    scale_ = j.value("scale", scale_);
    if (j.contains("lsm")) lsm_ = fit_config_from_json(j.at("lsm"));
    if (j.contains("nmtf")) nmtf_ = nmtf_from_json(j.at("nmtf"), nmtf_);
    allow_nonconverged = j.value("allow_nonconverged", allow_nonconverged);
  }
  json config() const override {
    return {{"network", absolute_or_empty(network_)},
            {"test", absolute_or_empty(test_)},
            {"method", method_},
            {"dims", dims_},
            {"scale", scale_},
            {"lsm", to_json(lsm_)},
            {"nmtf", nmtf_json(nmtf_)},
            {"allow_nonconverged", allow_nonconverged}};
  }
  std::uint64_t seed() const override { return lsm_.seed; }
  void set_seed(std::uint64_t s) override { lsm_.seed = s; }

  int run(RunContext& ctx, int threads) override {
    const RefineMethod method = parse_method(method_);
    const auto train = load_network_dir(network_, "--network");
    const auto test = test_.empty() ? train : load_network_dir(test_, "--test");
    const std::vector<Index> dims = method == RefineMethod::Raw ? std::vector<Index>{0} : dims_;
    if (method != RefineMethod::Raw) check_dims(dims, train);

    RefineOptions options;
    options.lsm = lsm_;
    options.lsm.threads = threads;
    options.nmtf = nmtf_;
    options.nmtf.seed = lsm_.seed;
    options.scale = parse_scale(scale_);

    RefinementEvaluation eval;
    eval.method = method;
    std::vector<RefinedNetwork> refined;
    std::vector<std::optional<FitResult>> fits;
    for (Index d : dims) {
      std::optional<FitResult> fr;
      RefinedNetwork r;
      if (method == RefineMethod::Lsm) {
        FitConfig fc = options.lsm;
        fc.dim = d;
        fr = compatnet::fit(train, fc);
        r = refine_network(train, *fr);
      } else {
        r = refine(train, method, d, options);
      }
      eval.per_dim.push_back({d, score_refinement(train, r, test, options.scale)});
      refined.push_back(std::move(r));
      fits.push_back(std::move(fr));
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < eval.per_dim.size(); ++k)
      if (eval.per_dim[k].report.mean_log_prob > eval.per_dim[best].report.mean_log_prob) best = k;
    eval.selected_dim = eval.per_dim[best].dim;
    eval.selected = eval.per_dim[best].report;

    json model{{"method", to_string(method)}, {"dim", eval.selected_dim}, {"refined", refined_json(refined[best])}};
    bool converged = true;
    if (fits[best]) {
      model["fit"] = to_json(*fits[best]);
      for (const auto& f : fits) converged = converged && f->converged;
    }
    ctx.write_json("model.json", model);
    ctx.write_text("refined.csv", refined_csv(train, refined[best]));
    json metrics = to_json(eval);
    metrics["converged"] = converged;
    ctx.write_json("metrics.json", metrics);
    const std::string table = format_eval_table({eval});
    ctx.write_text("metrics.txt", table);
    std::cout << table << "selected dimension: " << eval.selected_dim << "\n";
    if (!converged && !allow_nonconverged) {
      std::cerr << "error: latent space fit did not converge (use --allow-nonconverged to accept)\n";
      return kExitNonConverged;
    }
    return kExitOk;
  }

private:
  std::string network_, test_;
  std::string method_ = "lsm";
  std::vector<Index> dims_{2};
  std::optional<Index> dim_flag_;
  std::vector<Index> dim_grid_flag_;
  std::string scale_ = "compatibility";
  FitConfig lsm_;
  NmtfConfig nmtf_;
};

// ---------------------------------------------------------------- eval

class Eval final : public Command {
public:
  std::string name() const override { return "eval"; }
  std::string description() const override { return "Compare refinement methods on a train/test network pair"; }

  void add_flags(CLI::App& sub) override {
    sub.add_option("--train", train_, "Training network directory");
    sub.add_option("--test", test_, "Held-out network directory");
    sub.add_option("--methods", methods_, "Comma-separated methods")->delimiter(',');
    sub.add_option("--dim-grid", dims_, "Comma-separated dimensions")->delimiter(',');
    sub.add_option("--scale", scale_, "Comparison scale: compatibility or pair_term");
    sub.add_option("--nmtf-max-iter", nmtf_.max_iter, "NMTF sweep limit");
    add_lsm_flags(sub, lsm_);
  }
  void load(const json& j) override {
    train_ = j.value("train", train_);
    test_ = j.value("test", test_);
    methods_ = j.value("methods", methods_);
    dims_ = j.value("dims", dims_);
    scale_ = j.value("scale", scale_);
    if (j.contains("lsm")) lsm_ = fit_config_from_json(j.at("lsm"));
    if (j.contains("nmtf")) nmtf_ = nmtf_from_json(j.at("nmtf"), nmtf_);
  }
  json config() const override {
    return {{"train", absolute_or_empty(train_)},
            {"test", absolute_or_empty(test_)},
            {"methods", methods_},
            {"dims", dims_},
            {"scale", scale_},
            {"lsm", to_json(lsm_)},
            {"nmtf", nmtf_json(nmtf_)}};
  }
  std::uint64_t seed() const override { return lsm_.seed; }
  void set_seed(std::uint64_t s) override { lsm_.seed = s; }

  int run(RunContext& ctx, int threads) override {
    const auto train = load_network_dir(train_, "--train");
    const auto test = load_network_dir(test_, "--test");
    check_dims(dims_, train);
    RefineOptions options;
    options.lsm = lsm_;
    options.lsm.threads = threads;
    options.nmtf = nmtf_;
    options.nmtf.seed = lsm_.seed;
    options.scale = parse_scale(scale_);
    std::vector<RefinementEvaluation> evals;
    for (const auto& m : methods_) evals.push_back(evaluate_refinement(train, test, parse_method(m), dims_, options));
    json out = json::array();
    for (const auto& e : evals) out.push_back(to_json(e));
    ctx.write_json("eval.json", {{"scale", scale_}, {"methods", std::move(out)}});
    const std::string table = format_eval_table(evals);
    ctx.write_text("eval.txt", table);
    std::cout << table;
    return kExitOk;
  }

private:
  std::string train_, test_;
  std::vector<std::string> methods_{"raw", "lsm", "nmtf", "pca"};
  std::vector<Index> dims_{1, 2, 3};
  std::string scale_ = "compatibility";
  FitConfig lsm_;
  NmtfConfig nmtf_;
};

// ---------------------------------------------------------------- table1

class Table1 final : public Command {
public:
  Table1() { fit_.freeze_beta = true; }
  std::string name() const override { return "table1"; }
  std::string description() const override { return "Replicate study over noise regimes and edge-mean conventions"; }

  void add_flags(CLI::App& sub) override {
    sub.add_option("--reps", reps_, "Replicates per regime")->check(CLI::PositiveNumber);
    sub.add_option("--sigma-low", sigma_low_, "Edge noise of the low-noise regime");
    sub.add_option("--sigma-high", sigma_high_, "Edge noise of the high-noise regime");
    sub.add_option("--conventions", conventions_, "Comma-separated edge-mean conventions")->delimiter(',');
    add_lsm_flags(sub, fit_);
  }
  void load(const json& j) override {
    reps_ = j.value("reps", reps_);
    sigma_low_ = j.value("sigma_low", sigma_low_);
    sigma_high_ = j.value("sigma_high", sigma_high_);
    conventions_ = j.value("conventions", conventions_);
    if (j.contains("sim")) base_ = sim_config_from_json(j.at("sim"));
    if (j.contains("fit")) fit_ = fit_config_from_json(j.at("fit"));
    allow_nonconverged = j.value("allow_nonconverged", allow_nonconverged);
  }
  json config() const override {
    return {{"reps", reps_},         {"sigma_low", sigma_low_}, {"sigma_high", sigma_high_},
            {"conventions", conventions_}, {"sim", to_json(base_)},   {"fit", to_json(fit_)},
            {"allow_nonconverged", allow_nonconverged}};
  }
  std::uint64_t seed() const override { return base_.seed; }
  void set_seed(std::uint64_t s) override {
    base_.seed = s;
    fit_.seed = s;
  }

  int run(RunContext& ctx, int threads) override {
    if (reps_ < 1) throw UsageError("--reps must be >= 1");
    std::vector<std::pair<std::string, ReplicateReport>> reports;
    for (const auto& conv : conventions_) {
      EdgeMeanConvention c{};
      try {
        c = edge_mean_convention_from_string(conv);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      for (const auto& [label, sigma] : {std::pair{"low", sigma_low_}, std::pair{"high", sigma_high_}}) {
        SimConfig sc = base_;
        sc.sigma_w = sigma;
        sc.edge_mean_convention = c;
        FitConfig fc = fit_;
        fc.threads = threads;
        reports.emplace_back(std::string(label) + "/" + conv, run_replicates(sc, fc, reps_));
      }
    }
    json out = json::object();
    std::vector<std::pair<std::string, const ReplicateReport*>> cols;
    int nonconverged = 0, failed = 0;
    for (const auto& [label, rep] : reports) {
      out[label] = to_json(rep);
      cols.emplace_back(label, &rep);
      failed += rep.n_failed;
      for (const auto& m : rep.replicates) nonconverged += m.ok && !m.converged;
    }
    ctx.write_json("table1.json", out);
    const std::string table = format_table1(cols);
    ctx.write_text("table1.txt", table);
    std::cout << table;
    if (failed > 0) {
      std::cerr << "error: " << failed << " replicate fits failed\n";
      return kExitFailure;
    }
    if (nonconverged > 0 && !allow_nonconverged) {
      std::cerr << "error: " << nonconverged << " replicate fits did not converge (use --allow-nonconverged)\n";
      return kExitNonConverged;
    }
    return kExitOk;
  }

private:
  int reps_ = 15;
  double sigma_low_ = 0.15;
  double sigma_high_ = 1.5;
  std::vector<std::string> conventions_{"pair_term_only", "full_compatibility"};
  SimConfig base_;
  FitConfig fit_;
};

// ---------------------------------------------------------------- coxph

class Coxph final : public Command {
public:
  std::string name() const override { return "coxph"; }
  std::string description() const override { return "Fit a ridge Cox model and extract its compatibility network"; }

  void add_flags(CLI::App& sub) override {
    sub.add_option("--data", data_, "Training dataset CSV");
    sub.add_option("--test-data", test_, "Optional test dataset CSV for the C-index");
    sub.add_option("--min-count", min_count_, "Minimum support of type and pair columns");
    sub.add_option("--lambda", lambda_, "Fixed ridge penalty (skips cross-validation)");
    sub.add_option("--lambda-grid", grid_, "Comma-separated penalty grid for cross-validation")->delimiter(',');
  }
  void load(const json& j) override {
    data_ = j.value("data", data_);
    test_ = j.value("test_data", test_);
    min_count_ = j.value("min_count", min_count_);
    if (j.contains("lambda") && !j.at("lambda").is_null()) lambda_ = j.at("lambda").get<double>();
    grid_ = j.value("lambda_grid", grid_);
    seed_ = j.value("seed", seed_);
    allow_nonconverged = j.value("allow_nonconverged", allow_nonconverged);
  }
  json config() const override {
    return {{"data", absolute_or_empty(data_)},
            {"test_data", absolute_or_empty(test_)},
            {"min_count", min_count_},
            {"lambda", lambda_ ? json(*lambda_) : json(nullptr)},
            {"lambda_grid", grid_},
            {"seed", seed_},
            {"allow_nonconverged", allow_nonconverged}};
  }
  std::uint64_t seed() const override { return seed_; }
  void set_seed(std::uint64_t s) override { seed_ = s; }

  int run(RunContext& ctx, int) override {
    if (data_.empty()) throw UsageError("--data is required");
    if (min_count_ < 1) throw UsageError("--min-count must be >= 1");
    const auto train = load_dataset_file(data_, "--data");
    const auto design = design_matrix(train, min_count_);
    json metrics;
    double lambda = 0.0;
    if (lambda_) {
      if (!(*lambda_ >= 0.0)) throw UsageError("--lambda must be >= 0");
      lambda = *lambda_;
    } else {
      const auto sel = tune_lambda(design, train.time, train.event, grid_, seed_);
      lambda = sel.lambda;
      metrics["cv"] = {{"grid", sel.grid}, {"validation_loglik", sel.validation_loglik}};
    }
    const auto model = cox_fit(design, train.time, train.event, lambda);
    metrics["lambda"] = lambda;
    metrics["converged"] = model.converged;
    metrics["train_c_index"] = c_index(model.risk_scores(design.x), train.time, train.event);
    if (!test_.empty()) {
      const auto test = load_dataset_file(test_, "--test-data");
      const auto td = apply_design(test, design.columns);
      metrics["test_c_index"] = c_index(model.risk_scores(td.x), test.time, test.event);
    }
    ctx.write_json("cox_model.json", to_json(model));
    const auto net = extract_network(model, min_count_);
    save_network(net, ctx.path("network"));
    for (const char* f : {"network/edges.csv", "network/donor_nodes.csv", "network/recipient_nodes.csv"})
      ctx.add_artifact(f);
    metrics["network"] = {{"n_donors", net.n_donors()}, {"n_recipients", net.n_recipients()},
                          {"n_observed_pairs", net.n_observed()}};
    ctx.write_json("metrics.json", metrics);
    std::cout << "lambda " << lambda << ", " << model.columns.size() << " columns, train C-index "
              << metrics["train_c_index"].get<double>();
    if (metrics.contains("test_c_index")) std::cout << ", test C-index " << metrics["test_c_index"].get<double>();
    std::cout << "\n";
    if (!model.converged && !allow_nonconverged) {
      std::cerr << "error: Cox fit did not converge (use --allow-nonconverged to accept)\n";
      return kExitNonConverged;
    }
    return kExitOk;
  }

private:
  std::string data_, test_;
  Index min_count_ = 20;
  std::optional<double> lambda_;
  std::vector<double> grid_ = default_lambda_grid();
  std::uint64_t seed_ = 0;
};

// ---------------------------------------------------------------- pipeline

class Pipeline final : public Command {
public:
  std::string name() const override { return "pipeline"; }
  std::string description() const override { return "Coefficient-substitution pipeline over several seeds"; }

  void add_flags(CLI::App& sub) override {
    sub.add_option("--seeds", seeds_, "Number of seeds")->check(CLI::PositiveNumber);
    sub.add_option("--data", data_, "Dataset CSV instead of synthetic cohorts");
    sub.add_option("--test-data", test_, "Test dataset CSV (default: seeded half split of --data)");
    sub.add_flag("--identity-refinement", cfg_.identity_refinement, "Substitute the raw estimates back (debug)");
    sub.add_option("--min-count", cfg_.min_count, "Minimum support of type and pair columns");
    sub.add_option("--lambda-grid", cfg_.lambda_grid, "Comma-separated ridge penalty grid")->delimiter(',');
    sub.add_option("--methods", methods_flag_, "Comma-separated refiners (lsm, nmtf, pca)")->delimiter(',');
    sub.add_option("--lsm-dims", cfg_.lsm_dims, "LSM dimension grid")->delimiter(',');
    sub.add_option("--nmtf-dims", cfg_.nmtf_dims, "NMTF rank grid")->delimiter(',');
    sub.add_option("--pca-dims", cfg_.pca_dims, "PCA rank grid")->delimiter(',');
    add_lsm_flags(sub, cfg_.lsm);
    add_generator_flags(sub, gen_);
  }
  void finalize() override {
    if (!methods_flag_.empty()) {
      cfg_.methods.clear();
      for (const auto& m : methods_flag_) {
        const auto method = parse_method(m);
        if (method == RefineMethod::Raw) throw UsageError("raw is always evaluated; list only refiners");
        cfg_.methods.push_back(method);
      }
    }
  }
  void load(const json& j) override {
    seeds_ = j.value("seeds", seeds_);
    data_ = j.value("data", data_);
    test_ = j.value("test_data", test_);
    if (j.contains("generator")) gen_ = transplant_config_from_json(j.at("generator"));
    if (j.contains("pipeline")) cfg_ = pipeline_config_from_json(j.at("pipeline"));
    allow_nonconverged = j.value("allow_nonconverged", allow_nonconverged);
  }
  json config() const override {
    return {{"seeds", seeds_},
            {"data", absolute_or_empty(data_)},
            {"test_data", absolute_or_empty(test_)},
            {"generator", to_json(gen_)},
            {"pipeline", to_json(cfg_)},
            {"allow_nonconverged", allow_nonconverged}};
  }
  std::uint64_t seed() const override { return gen_.seed; }
  void set_seed(std::uint64_t s) override { gen_.seed = s; }

  int run(RunContext& ctx, int threads) override {
    if (seeds_ < 1) throw UsageError("--seeds must be >= 1");
    if (!test_.empty() && data_.empty()) throw UsageError("--test-data requires --data");
    PipelineBatch batch;
    if (data_.empty()) {
      batch = run_pipeline_batch(gen_, cfg_, seeds_, threads);
    } else {
      std::optional<TransplantDataset> test;
      if (!test_.empty()) test = load_dataset_file(test_, "--test-data");
      batch = run_pipeline_batch(load_dataset_file(data_, "--data"), test, cfg_, seeds_, gen_.seed, threads);
    }
    ctx.write_json("pipeline.json", to_json(batch));
    const std::string table = format_pipeline_table(batch);
    ctx.write_text("pipeline.txt", table);
    std::cout << table;
    int nonconverged = 0;
    for (const auto& s : batch.seeds) {
      if (!s.result) {
        std::cerr << "seed " << s.seed << " failed: " << s.error << "\n";
        continue;
      }
      nonconverged += !s.result->cox_converged;
      for (const auto& m : s.result->methods) nonconverged += !m.converged;
    }
    if (batch.n_failed > 0) return kExitFailure;
    if (nonconverged > 0 && !allow_nonconverged) {
      std::cerr << "error: " << nonconverged << " fits did not converge (use --allow-nonconverged)\n";
      return kExitNonConverged;
    }
    return kExitOk;
  }

private:
  int seeds_ = 20;
  std::string data_, test_;
  std::vector<std::string> methods_flag_;
  TransplantGenConfig gen_;
  PipelineConfig cfg_;
};

} // namespace

std::vector<std::unique_ptr<Command>> make_commands() {
  std::vector<std::unique_ptr<Command>> out;
  out.push_back(std::make_unique<SimulateNetwork>());
  out.push_back(std::make_unique<SimulateTransplants>());
  out.push_back(std::make_unique<Fit>());
  out.push_back(std::make_unique<Eval>());
  out.push_back(std::make_unique<Table1>());
  out.push_back(std::make_unique<Coxph>());
  out.push_back(std::make_unique<Pipeline>());
  return out;
}

} // namespace compatnet::cli
