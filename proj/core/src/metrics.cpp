#include "compatnet/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "compatnet/stats.hpp"

namespace compatnet {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
  if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
}

} // namespace

double rmse(std::span<const double> pred, std::span<const double> obs) {
  check_lengths(pred.size(), obs.size(), "rmse");
  double ss = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) ss += (pred[k] - obs[k]) * (pred[k] - obs[k]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

double mean_log_prob(std::span<const double> pred, std::span<const double> obs, std::span<const double> obs_se) {
  check_lengths(pred.size(), obs.size(), "mean_log_prob");
  check_lengths(pred.size(), obs_se.size(), "mean_log_prob");
  double total = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!(obs_se[k] > 0.0)) throw std::invalid_argument("mean_log_prob: standard errors must be positive");
    total += log_normal_density(pred[k], obs[k], obs_se[k]);
  }
  return total / static_cast<double>(pred.size());
}

double sign_accuracy(std::span<const double> pred, std::span<const double> obs) {
  check_lengths(pred.size(), obs.size(), "sign_accuracy");
  std::size_t agree = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) agree += (pred[k] >= 0.0) == (obs[k] >= 0.0);
  return static_cast<double>(agree) / static_cast<double>(pred.size());
}

const char* to_string(RefineMethod m) {
  switch (m) {
    case RefineMethod::Raw: return "raw";
    case RefineMethod::Lsm: return "lsm";
    case RefineMethod::Nmtf: return "nmtf";
    case RefineMethod::Pca: return "pca";
  }
  return "unknown";
}

RefineMethod refine_method_from_string(const std::string& s) {
  if (s == "raw") return RefineMethod::Raw;
  if (s == "lsm") return RefineMethod::Lsm;
  if (s == "nmtf") return RefineMethod::Nmtf;
  if (s == "pca") return RefineMethod::Pca;
  throw std::invalid_argument("unknown method '" + s + "'");
}

EvalReport score_refinement(const CompatibilityNetwork& train, const RefinedNetwork& refined,
                            const CompatibilityNetwork& test, EvalScale scale) {
  if (train.donor_labels() != test.donor_labels() || train.recipient_labels() != test.recipient_labels())
    throw std::invalid_argument("train and test networks must share labels");
  const Matrix& prediction = scale == EvalScale::Compatibility ? refined.mu : refined.eta;
  const Matrix target = scale == EvalScale::Compatibility ? test.compatibility_matrix() : test.edge_weight();
  const Matrix target_se = scale == EvalScale::Compatibility ? test.compatibility_se() : test.edge_se();

  std::vector<double> pred, obs, se;
  for (Index i = 0; i < test.n_donors(); ++i) {
    for (Index j = 0; j < test.n_recipients(); ++j) {
      if (!train.observed(i, j) || !test.observed(i, j)) continue;
      pred.push_back(prediction(i, j));
      obs.push_back(target(i, j));
      se.push_back(target_se(i, j));
    }
  }
  if (pred.empty()) throw NoCommonPairs("no pair is observed in both networks");
  EvalReport r;
  r.rmse = rmse(pred, obs);
  r.mean_log_prob = mean_log_prob(pred, obs, se);
  r.sign_accuracy = sign_accuracy(pred, obs);
  r.n_pairs = static_cast<Index>(pred.size());
  return r;
}

RefinementEvaluation evaluate_refinement(const CompatibilityNetwork& train, const CompatibilityNetwork& test,
                                         RefineMethod method, const std::vector<Index>& dim_grid,
                                         const RefineOptions& options) {
  RefinementEvaluation out;
  out.method = method;
  if (method == RefineMethod::Raw) {
    const auto refined = refine(train, method, 0, options);
    out.per_dim.push_back({0, score_refinement(train, refined, test, options.scale)});
  } else {
    if (dim_grid.empty()) throw std::invalid_argument("evaluate_refinement: empty dimension grid");
    for (Index dim : dim_grid) {
      const auto refined = refine(train, method, dim, options);
      out.per_dim.push_back({dim, score_refinement(train, refined, test, options.scale)});
    }
  }
  const DimensionReport* best = &out.per_dim.front();
  for (const auto& d : out.per_dim)
    if (d.report.mean_log_prob > best->report.mean_log_prob) best = &d;
  out.selected_dim = best->dim;
  out.selected = best->report;
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"rmse", r.rmse}, {"mean_log_prob", r.mean_log_prob}, {"sign_accuracy", r.sign_accuracy},
          {"n_pairs", r.n_pairs}};
}

nlohmann::json to_json(const RefinementEvaluation& e) {
  nlohmann::json j{{"method", to_string(e.method)}, {"selected_dim", e.selected_dim}, {"selected", to_json(e.selected)}};
  auto dims = nlohmann::json::array();
  for (const auto& d : e.per_dim) dims.push_back({{"dim", d.dim}, {"report", to_json(d.report)}});
  j["per_dim"] = std::move(dims);
  return j;
}

std::string format_eval_table(const std::vector<RefinementEvaluation>& evaluations) {
  std::ostringstream os;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%-16s %-8s %10s %6s\n", "metric", "method", "value", "dim");
  os << buf;
  struct Row {
    const char* name;
    double EvalReport::*field;
  };
  const Row rows[] = {{"RMSE", &EvalReport::rmse},
                      {"Mean log-prob.", &EvalReport::mean_log_prob},
                      {"Sign prediction", &EvalReport::sign_accuracy}};
  for (const auto& row : rows) {
    bool first = true;
    for (const auto& e : evaluations) {
      std::snprintf(buf, sizeof(buf), "%-16s %-8s %10.4f %6lld\n", first ? row.name : "", to_string(e.method),
                    e.selected.*row.field, static_cast<long long>(e.selected_dim));
      os << buf;
      first = false;
    }
  }
  return os.str();
}

} // namespace compatnet
