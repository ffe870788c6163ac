#include "compatnet/lsm.hpp"

#include <cmath>
#include <numbers>

#include "compatnet/lbfgs.hpp"
#include "compatnet/mds.hpp"
#include "compatnet/parallel.hpp"
#include "compatnet/rng.hpp"

namespace compatnet {

void LsmParams::validate() const {
  if (z_r.cols() != z_d.cols()) throw std::invalid_argument("LsmParams: z_d and z_r dimensions differ");
  if (delta.size() != z_d.rows() || gamma.size() != z_r.rows())
    throw std::invalid_argument("LsmParams: node effect lengths do not match positions");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("LsmParams: beta must be positive");
  if (!std::isfinite(alpha) || !z_d.allFinite() || !z_r.allFinite() || !delta.allFinite() || !gamma.allFinite())
    throw std::invalid_argument("LsmParams: non-finite entry");
}

void FitConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("FitConfig: dim must be >= 1");
  if (max_iter < 1) throw std::invalid_argument("FitConfig: max_iter must be >= 1");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("FitConfig: grad_tol must be > 0");
  if (restarts < 0) throw std::invalid_argument("FitConfig: restarts must be >= 0");
}

double pair_affinity(const LsmParams& params, Index i, Index j) {
  return params.alpha - params.beta * (params.z_d.row(i) - params.z_r.row(j)).squaredNorm();
}

double predict_compatibility(const LsmParams& params, Index i, Index j) {
  return pair_affinity(params, i, j) + params.delta(i) + params.gamma(j);
}

namespace {

void check_dims(const LsmParams& params, const CompatibilityNetwork& net) {
  if (params.n_donors() != net.n_donors() || params.n_recipients() != net.n_recipients() ||
      params.delta.size() != net.n_donors() || params.gamma.size() != net.n_recipients() ||
      params.z_r.cols() != params.z_d.cols())
    throw DimensionMismatch("parameter dimensions do not match the network");
}

double floored(double se) { return std::max(se, kMinStdErr); }

constexpr double kHalfLog2Pi = 0.91893853320467274178; // 0.5 * log(2 pi)

// log N(x | m, s^2) with s already floored.
double log_density(double x, double m, double s) {
  const double z = (x - m) / s;
  return -kHalfLog2Pi - std::log(s) - 0.5 * z * z;
}

} // namespace

double log_likelihood(const LsmParams& params, const CompatibilityNetwork& net) {
  check_dims(params, net);
  double ll = 0.0;
  const Matrix& w = net.edge_weight();
  const Matrix& se = net.edge_se();
  for (Index j = 0; j < net.n_recipients(); ++j)
    for (Index i = 0; i < net.n_donors(); ++i)
      if (net.observed(i, j)) ll += log_density(w(i, j), pair_affinity(params, i, j), floored(se(i, j)));
  for (Index i = 0; i < net.n_donors(); ++i)
    ll += log_density(net.donor_weight()(i), params.delta(i), floored(net.donor_se()(i)));
  for (Index j = 0; j < net.n_recipients(); ++j)
    ll += log_density(net.recipient_weight()(j), params.gamma(j), floored(net.recipient_se()(j)));
  return ll;
}

Vector pack(const LsmParams& params) {
  const auto layout = ParamLayout::of(params);
  Vector x(layout.size());
  for (Index i = 0; i < layout.n_donors; ++i)
    for (Index k = 0; k < layout.dim; ++k) x(layout.z_d(i, k)) = params.z_d(i, k);
  for (Index j = 0; j < layout.n_recipients; ++j)
    for (Index k = 0; k < layout.dim; ++k) x(layout.z_r(j, k)) = params.z_r(j, k);
  x(layout.alpha()) = params.alpha;
  x(layout.log_beta()) = std::log(params.beta);
  x.segment(layout.delta(0), layout.n_donors) = params.delta;
  x.segment(layout.gamma(0), layout.n_recipients) = params.gamma;
  return x;
}

LsmParams unpack(const Vector& x, const ParamLayout& layout) {
  if (x.size() != layout.size()) throw DimensionMismatch("packed parameter length mismatch");
  LsmParams p;
  p.z_d.resize(layout.n_donors, layout.dim);
  p.z_r.resize(layout.n_recipients, layout.dim);
  for (Index i = 0; i < layout.n_donors; ++i)
    for (Index k = 0; k < layout.dim; ++k) p.z_d(i, k) = x(layout.z_d(i, k));
  for (Index j = 0; j < layout.n_recipients; ++j)
    for (Index k = 0; k < layout.dim; ++k) p.z_r(j, k) = x(layout.z_r(j, k));
  p.alpha = x(layout.alpha());
  p.beta = std::exp(x(layout.log_beta()));
  p.delta = x.segment(layout.delta(0), layout.n_donors);
  p.gamma = x.segment(layout.gamma(0), layout.n_recipients);
  return p;
}

namespace {

// Log-likelihood and its packed gradient in one pass.
double value_and_gradient(const LsmParams& params, const CompatibilityNetwork& net, Vector& grad) {
  check_dims(params, net);
  const auto layout = ParamLayout::of(params);
  grad.setZero(layout.size());
  const Matrix& w = net.edge_weight();
  const Matrix& se = net.edge_se();
  const Index dim = layout.dim;
  double ll = 0.0;
  double d_alpha = 0.0, d_logbeta = 0.0;
  Eigen::RowVectorXd diff(dim);
  for (Index i = 0; i < layout.n_donors; ++i) {
    for (Index j = 0; j < layout.n_recipients; ++j) {
      if (!net.observed(i, j)) continue;
      diff = params.z_d.row(i) - params.z_r.row(j);
      const double dist2 = diff.squaredNorm();
      const double eta = params.alpha - params.beta * dist2;
      const double s = floored(se(i, j));
      const double resid = (w(i, j) - eta) / (s * s); // dL/deta
      ll += log_density(w(i, j), eta, s);
      d_alpha += resid;
      d_logbeta -= resid * params.beta * dist2;
      const double scale = -2.0 * params.beta * resid;
      for (Index k = 0; k < dim; ++k) {
        grad(layout.z_d(i, k)) += scale * diff(k);
        grad(layout.z_r(j, k)) -= scale * diff(k);
      }
    }
  }
  grad(layout.alpha()) = d_alpha;
  grad(layout.log_beta()) = d_logbeta;
  for (Index i = 0; i < layout.n_donors; ++i) {
    const double s = floored(net.donor_se()(i));
    ll += log_density(net.donor_weight()(i), params.delta(i), s);
    grad(layout.delta(i)) = (net.donor_weight()(i) - params.delta(i)) / (s * s);
  }
  for (Index j = 0; j < layout.n_recipients; ++j) {
    const double s = floored(net.recipient_se()(j));
    ll += log_density(net.recipient_weight()(j), params.gamma(j), s);
    grad(layout.gamma(j)) = (net.recipient_weight()(j) - params.gamma(j)) / (s * s);
  }
  return ll;
}

struct StartOutcome {
  bool ok = false;
  FitResult result;
};

LsmParams random_start(const CompatibilityNetwork& net, const FitConfig& config, int restart) {
  auto rng = make_rng(config.seed, "lsm-restart", static_cast<std::uint64_t>(restart));
  std::normal_distribution<double> normal(0.0, 1.0);
  LsmParams p;
  p.z_d.resize(net.n_donors(), config.dim);
  p.z_r.resize(net.n_recipients(), config.dim);
  p.delta.resize(net.n_donors());
  p.gamma.resize(net.n_recipients());
  for (Index i = 0; i < p.z_d.size(); ++i) p.z_d.data()[i] = 0.5 * normal(rng);
  for (Index i = 0; i < p.z_r.size(); ++i) p.z_r.data()[i] = 0.5 * normal(rng);
  for (Index i = 0; i < p.delta.size(); ++i) p.delta(i) = 0.5 * normal(rng);
  for (Index j = 0; j < p.gamma.size(); ++j) p.gamma(j) = 0.5 * normal(rng);
  p.alpha = 0.0;
  p.beta = 1.0;
  return p;
}

LsmParams mds_start(const CompatibilityNetwork& net, const FitConfig& config) {
  auto pos = mds_init(net, config.dim);
  LsmParams p;
  p.z_d = std::move(pos.z_d);
  p.z_r = std::move(pos.z_r);
  p.alpha = 0.0;
  p.beta = 1.0;
  p.delta = net.donor_weight();
  p.gamma = net.recipient_weight();
  return p;
}

StartOutcome run_start(const CompatibilityNetwork& net, const FitConfig& config, const LsmParams& start,
                       int index) {
  StartOutcome out;
  const auto layout = ParamLayout::of(start);
  LbfgsOptions options;
  options.max_iter = config.max_iter;
  options.grad_tol = config.grad_tol;
  std::vector<bool> frozen;
  if (config.freeze_beta) {
    frozen.assign(static_cast<std::size_t>(layout.size()), false);
    frozen[static_cast<std::size_t>(layout.log_beta())] = true;
  }
  Objective objective = [&](const Vector& x, Vector& g) {
    const double ll = value_and_gradient(unpack(x, layout), net, g);
    g = -g;
    return -ll;
  };
  const auto opt = minimize_lbfgs(objective, pack(start), options, frozen);
  if (opt.status == LbfgsStatus::Diverged || !std::isfinite(opt.value) || !opt.x.allFinite()) return out;

  out.ok = true;
  out.result.params = unpack(opt.x, layout);
  out.result.log_likelihood = -opt.value;
  out.result.iterations = opt.iterations;
  out.result.grad_norm = opt.grad_norm;
  out.result.restart_index = index;
  out.result.converged = opt.grad_norm <= config.grad_tol;
  out.result.trace.reserve(opt.trace.size());
  for (double f : opt.trace) out.result.trace.push_back(-f);
  return out;
}

} // namespace

Vector log_likelihood_gradient(const LsmParams& params, const CompatibilityNetwork& net) {
  Vector g;
  value_and_gradient(params, net, g);
  return g;
}

FitResult fit(const CompatibilityNetwork& net, const FitConfig& config, const std::optional<LsmParams>& init) {
  config.validate();
  if (init) {
    init->validate();
    check_dims(*init, net);
    if (init->dim() != config.dim) throw DimensionMismatch("init dimension differs from config.dim");
  } else if (config.dim > net.n_donors() + net.n_recipients()) {
    throw DimensionMismatch("latent dimension exceeds the number of nodes");
  }

  const int n_starts = 1 + config.restarts;
  std::vector<StartOutcome> outcomes(static_cast<std::size_t>(n_starts));
  parallel_for(outcomes.size(), config.threads, [&](std::size_t k) {
    const int index = static_cast<int>(k);
    const LsmParams start = index == 0 ? (init ? *init : mds_start(net, config)) : random_start(net, config, index);
    outcomes[k] = run_start(net, config, start, index);
  });

  const StartOutcome* best = nullptr;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    if (!best || o.result.log_likelihood > best->result.log_likelihood + 1e-12) best = &o;
  }
  if (!best) throw FitError("all optimizer starts diverged");
  return best->result;
}

RefinedNetwork refine_network(const CompatibilityNetwork& net, const FitResult& result) {
  const auto& p = result.params;
  check_dims(p, net);
  RefinedNetwork r;
  r.donor_labels = net.donor_labels();
  r.recipient_labels = net.recipient_labels();
  r.delta = p.delta;
  r.gamma = p.gamma;
  r.eta.resize(net.n_donors(), net.n_recipients());
  for (Index i = 0; i < net.n_donors(); ++i)
    for (Index j = 0; j < net.n_recipients(); ++j) r.eta(i, j) = pair_affinity(p, i, j);
  r.mu = r.eta;
  r.mu.colwise() += r.delta;
  r.mu.rowwise() += r.gamma.transpose();
  return r;
}

RefinedNetwork identity_refinement(const CompatibilityNetwork& net) {
  RefinedNetwork r;
  r.donor_labels = net.donor_labels();
  r.recipient_labels = net.recipient_labels();
  r.delta = net.donor_weight();
  r.gamma = net.recipient_weight();
  r.eta = net.edge_weight();
  r.mu = net.compatibility_matrix();
  return r;
}

namespace {

nlohmann::json rows_of(const Matrix& m) {
  auto arr = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    arr.push_back(std::move(row));
  }
  return arr;
}

Matrix matrix_of(const nlohmann::json& arr, Index cols) {
  Matrix m(static_cast<Index>(arr.size()), cols);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (static_cast<Index>(arr[i].size()) != cols) throw DimensionMismatch("ragged position matrix");
    for (Index k = 0; k < cols; ++k) m(static_cast<Index>(i), k) = arr[i][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

Vector vector_of(const nlohmann::json& arr) {
  const auto v = arr.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

} // namespace

nlohmann::json to_json(const LsmParams& params) {
  return {
      {"alpha", params.alpha},
      {"beta", params.beta},
      {"dim", params.dim()},
      {"z_d", rows_of(params.z_d)},
      {"z_r", rows_of(params.z_r)},
      {"delta", std::vector<double>(params.delta.data(), params.delta.data() + params.delta.size())},
      {"gamma", std::vector<double>(params.gamma.data(), params.gamma.data() + params.gamma.size())},
  };
}

LsmParams params_from_json(const nlohmann::json& j) {
  LsmParams p;
  const auto dim = j.at("dim").get<Index>();
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.z_d = matrix_of(j.at("z_d"), dim);
  p.z_r = matrix_of(j.at("z_r"), dim);
  p.delta = vector_of(j.at("delta"));
  p.gamma = vector_of(j.at("gamma"));
  p.validate();
  return p;
}

nlohmann::json to_json(const FitResult& result) {
  auto j = to_json(result.params);
  j["log_likelihood"] = result.log_likelihood;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["grad_norm"] = result.grad_norm;
  j["restart_index"] = result.restart_index;
  return j;
}

} // namespace compatnet
