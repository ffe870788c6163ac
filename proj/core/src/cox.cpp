#include "compatnet/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "compatnet/rng.hpp"

namespace compatnet {

namespace {

// Subject indices sorted by descending time, grouped into runs of equal time.
struct TimeGroups {
  std::vector<Index> order;
  std::vector<std::pair<std::size_t, std::size_t>> runs; // [begin, end) into order
};

TimeGroups group_by_time_desc(const Vector& time) {
  TimeGroups g;
  g.order.resize(static_cast<std::size_t>(time.size()));
  std::iota(g.order.begin(), g.order.end(), Index{0});
  std::stable_sort(g.order.begin(), g.order.end(), [&](Index a, Index b) { return time(a) > time(b); });
  for (std::size_t b = 0; b < g.order.size();) {
    std::size_t e = b + 1;
    while (e < g.order.size() && time(g.order[e]) == time(g.order[b])) ++e;
    g.runs.emplace_back(b, e);
    b = e;
  }
  return g;
}

void check_inputs(const Matrix& x, const Vector& time, const std::vector<std::uint8_t>& event, const Vector& w) {
  if (x.rows() != time.size() || static_cast<std::size_t>(time.size()) != event.size())
    throw std::invalid_argument("cox: row counts of design, time and event differ");
  if (w.size() != x.cols()) throw std::invalid_argument("cox: coefficient length differs from design columns");
}

} // namespace

PartialLikelihood cox_partial_likelihood(const Matrix& x, const Vector& time, const std::vector<std::uint8_t>& event,
                                         const Vector& coefficients, bool derivatives) {
  check_inputs(x, time, event, coefficients);
  const Index n = x.rows(), p = x.cols();
  const Vector eta = x * coefficients;
  const double offset = n > 0 ? eta.maxCoeff() : 0.0;
  const Vector risk = (eta.array() - offset).exp().matrix();
  const auto groups = group_by_time_desc(time);

  PartialLikelihood out;
  double s0 = 0.0;
  Vector s1 = Vector::Zero(p);
  if (derivatives) out.gradient = Vector::Zero(p);

  // For the information matrix: sum_k d_k (S2_k / S0_k - m_k m_k'), with the
  // S2 part rewritten per subject as c_j r_j x_j x_j' where
  // c_j = sum over event times t_k <= t_j of d_k / S0_k.
  std::vector<double> inv_s0_weight(groups.runs.size(), 0.0);
  std::vector<std::pair<double, Vector>> means; // (d_k, m_k)

  for (std::size_t g = 0; g < groups.runs.size(); ++g) {
    const auto [b, e] = groups.runs[g];
    for (std::size_t k = b; k < e; ++k) {
      const Index s = groups.order[k];
      s0 += risk(s);
      if (derivatives) s1 += risk(s) * x.row(s).transpose();
    }
    double d = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      const Index s = groups.order[k];
      if (!event[static_cast<std::size_t>(s)]) continue;
      d += 1.0;
      out.value += eta(s);
      if (derivatives) out.gradient += x.row(s).transpose();
    }
    if (d == 0.0) continue;
    out.value -= d * (std::log(s0) + offset);
    if (derivatives) {
      Vector m = s1 / s0;
      out.gradient -= d * m;
      inv_s0_weight[g] = d / s0;
      means.emplace_back(d, std::move(m));
    }
  }
  if (!derivatives) return out;

  // Accumulate c_j from the smallest time upwards.
  Vector c(n);
  double acc = 0.0;
  for (std::size_t g = groups.runs.size(); g-- > 0;) {
    acc += inv_s0_weight[g];
    const auto [b, e] = groups.runs[g];
    for (std::size_t k = b; k < e; ++k) c(groups.order[k]) = acc;
  }
  const Vector weights = c.cwiseProduct(risk);
  out.information = x.transpose() * weights.asDiagonal() * x;
  Matrix m(static_cast<Index>(means.size()), p);
  for (std::size_t k = 0; k < means.size(); ++k) m.row(static_cast<Index>(k)) = std::sqrt(means[k].first) * means[k].second.transpose();
  out.information.noalias() -= m.transpose() * m;
  out.information = 0.5 * (out.information + out.information.transpose());
  return out;
}

namespace {

constexpr int kCoxMaxIter = 100;
constexpr double kCoxGradTol = 1e-8;

double penalized(double value, const Vector& w, double lambda) { return value - 0.5 * lambda * w.squaredNorm(); }

} // namespace

CoxModel cox_fit(const DesignMatrix& design, const Vector& time, const std::vector<std::uint8_t>& event, double lambda,
                 const std::optional<Vector>& init) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("cox_fit: lambda must be >= 0");
  const Matrix& x = design.x;
  const Index p = x.cols();
  if (lambda == 0.0) {
    for (Index k = 0; k < p; ++k)
      if ((x.col(k).array() == 0.0).all())
        throw CoxError("cox_fit: column " + std::to_string(k) + " is constant zero");
  }
  Vector w = init ? *init : Vector::Zero(p);
  check_inputs(x, time, event, w);
  if (std::none_of(event.begin(), event.end(), [](auto e) { return e != 0; }))
    throw CoxError("cox_fit: no events");

  CoxModel model;
  model.penalty = lambda;
  model.columns = design.columns;

  auto pl = cox_partial_likelihood(x, time, event, w);
  double objective = penalized(pl.value, w, lambda);
  Matrix info;
  Vector grad;
  int iter = 0;
  for (;; ++iter) {
    grad = pl.gradient - lambda * w;
    info = pl.information;
    info.diagonal().array() += lambda;
    model.grad_norm = p > 0 ? grad.lpNorm<Eigen::Infinity>() : 0.0;
    if (model.grad_norm <= kCoxGradTol) {
      model.converged = true;
      break;
    }
    if (iter >= kCoxMaxIter) break;

    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success) throw CoxError("cox_fit: information matrix is singular");
    const Vector step = llt.solve(grad);

    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h < 60; ++h, scale *= 0.5) {
      const Vector trial = w + scale * step;
      const double value = cox_partial_likelihood(x, time, event, trial, false).value;
      const double obj = penalized(value, trial, lambda);
      // Near the optimum the change is below rounding error; accept it.
      const double noise = 1e-12 * (1.0 + std::abs(objective));
      if (std::isfinite(obj) && obj >= objective - noise) {
        w = trial;
        objective = obj;
        improved = true;
        break;
      }
    }
    if (!improved) break; // at numerical optimum; convergence judged by the gradient
    pl = cox_partial_likelihood(x, time, event, w);
  }

  Eigen::LLT<Matrix> llt(info);
  if (llt.info() != Eigen::Success) throw CoxError("cox_fit: information matrix is singular");
  const Matrix cov = llt.solve(Matrix::Identity(p, p));
  model.coefficients = w;
  model.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  model.iterations = iter;
  model.log_partial_likelihood = pl.value;
  return model;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(10);
  for (int k = 0; k < 10; ++k) grid[static_cast<std::size_t>(k)] = std::pow(10.0, -3.0 + 5.0 * k / 9.0);
  return grid;
}

LambdaSelection tune_lambda(const DesignMatrix& design, const Vector& time, const std::vector<std::uint8_t>& event,
                            const std::vector<double>& lambda_grid, std::uint64_t seed) {
  if (lambda_grid.empty()) throw std::invalid_argument("tune_lambda: empty grid");
  LambdaSelection sel;
  sel.grid = lambda_grid;
  if (lambda_grid.size() == 1) {
    sel.lambda = lambda_grid.front();
    sel.validation_loglik.assign(1, 0.0);
    return sel;
  }

  const Index n = design.x.rows();
  std::vector<Index> fold_rows[2];
  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
    auto rng = make_rng(seed, "cv-folds", static_cast<std::uint64_t>(attempt));
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    fold_rows[0].assign(perm.begin(), perm.begin() + n / 2);
    fold_rows[1].assign(perm.begin() + n / 2, perm.end());
    ok = true;
    for (auto& rows : fold_rows) {
      std::sort(rows.begin(), rows.end());
      ok = ok && std::any_of(rows.begin(), rows.end(), [&](Index r) { return event[static_cast<std::size_t>(r)] != 0; });
    }
  }
  if (!ok) throw CoxError("tune_lambda: could not draw folds that both contain events");

  struct Fold {
    DesignMatrix design;
    Vector time;
    std::vector<std::uint8_t> event;
  };
  Fold folds[2];
  for (int f = 0; f < 2; ++f) {
    const auto& rows = fold_rows[f];
    folds[f].design.columns = design.columns;
    folds[f].design.x.resize(static_cast<Index>(rows.size()), design.x.cols());
    folds[f].time.resize(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      folds[f].design.x.row(static_cast<Index>(k)) = design.x.row(rows[k]);
      folds[f].time(static_cast<Index>(k)) = time(rows[k]);
      folds[f].event.push_back(event[static_cast<std::size_t>(rows[k])]);
    }
  }

  // Walk the grid from the strongest penalty down, warm-starting each fit.
  std::vector<std::size_t> order(lambda_grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lambda_grid[a] > lambda_grid[b]; });
  sel.validation_loglik.assign(lambda_grid.size(), 0.0);
  for (int f = 0; f < 2; ++f) {
    const Fold& fit_fold = folds[f];
    const Fold& held = folds[1 - f];
    std::optional<Vector> warm;
    for (const std::size_t l : order) {
      try {
        const auto model = cox_fit(fit_fold.design, fit_fold.time, fit_fold.event, lambda_grid[l], warm);
        warm = model.coefficients;
        sel.validation_loglik[l] +=
            cox_partial_likelihood(held.design.x, held.time, held.event, model.coefficients, false).value;
      } catch (const CoxError&) {
        sel.validation_loglik[l] = -std::numeric_limits<double>::infinity();
      }
    }
  }
  const auto best = std::max_element(sel.validation_loglik.begin(), sel.validation_loglik.end());
  sel.lambda = lambda_grid[static_cast<std::size_t>(best - sel.validation_loglik.begin())];
  return sel;
}

namespace {

// Fenwick tree of counts over risk ranks.
class RankCounter {
public:
  explicit RankCounter(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Number of inserted ranks < rank.
  std::uint64_t below(std::size_t rank) const {
    std::uint64_t s = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

private:
  std::vector<std::uint64_t> tree_;
};

} // namespace

double c_index(const Vector& risk, const Vector& time, const std::vector<std::uint8_t>& event) {
  if (risk.size() != time.size() || static_cast<std::size_t>(time.size()) != event.size())
    throw std::invalid_argument("c_index: length mismatch");
  const auto n = static_cast<std::size_t>(risk.size());

  std::vector<double> sorted(risk.data(), risk.data() + n);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t s = 0; s < n; ++s)
    rank[s] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), risk(static_cast<Index>(s))) -
                                       sorted.begin());

  const auto groups = group_by_time_desc(time);
  RankCounter later(sorted.size());
  std::uint64_t inserted = 0;
  double concordant = 0.0, comparable = 0.0;
  for (const auto& [b, e] : groups.runs) {
    for (std::size_t k = b; k < e; ++k) {
      const auto i = static_cast<std::size_t>(groups.order[k]);
      if (!event[i]) continue;
      // Subjects with strictly later times.
      const auto lower = later.below(rank[i]);
      const auto equal = later.below(rank[i] + 1) - lower;
      concordant += static_cast<double>(lower) + 0.5 * static_cast<double>(equal);
      comparable += static_cast<double>(inserted);
      // Censored subjects at the same time.
      for (std::size_t m = b; m < e; ++m) {
        const auto j = static_cast<std::size_t>(groups.order[m]);
        if (event[j]) continue;
        comparable += 1.0;
        if (rank[i] > rank[j]) concordant += 1.0;
        else if (rank[i] == rank[j]) concordant += 0.5;
      }
    }
    for (std::size_t k = b; k < e; ++k) {
      later.add(rank[static_cast<std::size_t>(groups.order[k])]);
      ++inserted;
    }
  }
  if (comparable == 0.0) throw std::invalid_argument("c_index: no comparable pairs");
  return concordant / comparable;
}

std::vector<std::string> CoxModel::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

CompatibilityNetwork extract_network(const CoxModel& model, Index min_support) {
  std::map<std::string, Index> donors, recipients;
  NetworkData data;
  std::vector<double> dw, dse, rw, rse;
  for (std::size_t k = 0; k < model.columns.size(); ++k) {
    const auto& c = model.columns[k];
    const auto idx = static_cast<Index>(k);
    if (c.kind == ColumnKind::DonorType) {
      donors.emplace(c.donor, static_cast<Index>(data.donor_labels.size()));
      data.donor_labels.push_back(c.donor);
      dw.push_back(-model.coefficients(idx));
      dse.push_back(model.std_errors(idx));
    } else if (c.kind == ColumnKind::RecipientType) {
      recipients.emplace(c.recipient, static_cast<Index>(data.recipient_labels.size()));
      data.recipient_labels.push_back(c.recipient);
      rw.push_back(-model.coefficients(idx));
      rse.push_back(model.std_errors(idx));
    }
  }
  const auto nd = static_cast<Index>(data.donor_labels.size());
  const auto nr = static_cast<Index>(data.recipient_labels.size());
  data.donor_weight = Eigen::Map<const Vector>(dw.data(), nd);
  data.donor_se = Eigen::Map<const Vector>(dse.data(), nd);
  data.recipient_weight = Eigen::Map<const Vector>(rw.data(), nr);
  data.recipient_se = Eigen::Map<const Vector>(rse.data(), nr);
  data.edge_weight = Matrix::Zero(nd, nr);
  data.edge_se = Matrix::Zero(nd, nr);
  data.edge_mask = Mask::Constant(nd, nr, false);
  for (std::size_t k = 0; k < model.columns.size(); ++k) {
    const auto& c = model.columns[k];
    if (c.kind != ColumnKind::Pair || c.support < min_support) continue;
    const auto di = donors.find(c.donor);
    const auto rj = recipients.find(c.recipient);
    if (di == donors.end() || rj == recipients.end()) continue;
    const auto idx = static_cast<Index>(k);
    data.edge_weight(di->second, rj->second) = -model.coefficients(idx);
    data.edge_se(di->second, rj->second) = model.std_errors(idx);
    data.edge_mask(di->second, rj->second) = true;
  }
  return CompatibilityNetwork(std::move(data));
}

CoxModel substitute_coefficients(const CoxModel& model, const RefinedNetwork& refined) {
  if (refined.delta.size() != static_cast<Index>(refined.donor_labels.size()) ||
      refined.gamma.size() != static_cast<Index>(refined.recipient_labels.size()) ||
      refined.eta.rows() != refined.delta.size() || refined.eta.cols() != refined.gamma.size())
    throw std::invalid_argument("substitute_coefficients: refined estimates have inconsistent shapes");
  std::map<std::string, Index> donors, recipients;
  for (std::size_t k = 0; k < refined.donor_labels.size(); ++k) donors.emplace(refined.donor_labels[k], k);
  for (std::size_t k = 0; k < refined.recipient_labels.size(); ++k)
    recipients.emplace(refined.recipient_labels[k], k);

  Index donor_cols = 0, recipient_cols = 0;
  CoxModel out = model;
  for (std::size_t k = 0; k < model.columns.size(); ++k) {
    const auto& c = model.columns[k];
    const auto idx = static_cast<Index>(k);
    const auto di = donors.find(c.donor);
    const auto rj = recipients.find(c.recipient);
    switch (c.kind) {
      case ColumnKind::Basic: break;
      case ColumnKind::DonorType:
        if (di == donors.end()) throw std::invalid_argument("substitute_coefficients: no estimate for donor " + c.donor);
        out.coefficients(idx) = -refined.delta(di->second);
        ++donor_cols;
        break;
      case ColumnKind::RecipientType:
        if (rj == recipients.end())
          throw std::invalid_argument("substitute_coefficients: no estimate for recipient " + c.recipient);
        out.coefficients(idx) = -refined.gamma(rj->second);
        ++recipient_cols;
        break;
      case ColumnKind::Pair:
        if (di != donors.end() && rj != recipients.end()) out.coefficients(idx) = -refined.eta(di->second, rj->second);
        break;
    }
  }
  if (donor_cols != refined.delta.size() || recipient_cols != refined.gamma.size())
    throw std::invalid_argument("substitute_coefficients: refined network has nodes without model columns");
  return out;
}

namespace {

const char* kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::Basic: return "basic";
    case ColumnKind::DonorType: return "donor_type";
    case ColumnKind::RecipientType: return "recipient_type";
    case ColumnKind::Pair: return "pair";
  }
  return "basic";
}

ColumnKind kind_from(const std::string& s) {
  if (s == "basic") return ColumnKind::Basic;
  if (s == "donor_type") return ColumnKind::DonorType;
  if (s == "recipient_type") return ColumnKind::RecipientType;
  if (s == "pair") return ColumnKind::Pair;
  throw std::invalid_argument("unknown column kind '" + s + "'");
}

} // namespace

nlohmann::json to_json(const CoxModel& model) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : model.columns) {
    cols.push_back({{"name", c.name},
                    {"kind", kind_name(c.kind)},
                    {"donor", c.donor},
                    {"recipient", c.recipient},
                    {"basic_index", c.basic_index},
                    {"support", c.support}});
  }
  return {{"lambda", model.penalty},
          {"column_names", model.column_names()},
          {"coefficients", std::vector<double>(model.coefficients.data(), model.coefficients.data() + model.coefficients.size())},
          {"std_errors", std::vector<double>(model.std_errors.data(), model.std_errors.data() + model.std_errors.size())},
          {"converged", model.converged},
          {"iterations", model.iterations},
          {"log_partial_likelihood", model.log_partial_likelihood},
          {"grad_norm", model.grad_norm},
          {"columns", std::move(cols)}};
}

CoxModel cox_model_from_json(const nlohmann::json& j) {
  CoxModel m;
  m.penalty = j.at("lambda").get<double>();
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  const auto se = j.at("std_errors").get<std::vector<double>>();
  if (coef.size() != se.size()) throw std::invalid_argument("cox model: coefficient/std_error length mismatch");
  m.coefficients = Eigen::Map<const Vector>(coef.data(), static_cast<Index>(coef.size()));
  m.std_errors = Eigen::Map<const Vector>(se.data(), static_cast<Index>(se.size()));
  m.converged = j.value("converged", false);
  m.iterations = j.value("iterations", 0);
  m.log_partial_likelihood = j.value("log_partial_likelihood", 0.0);
  m.grad_norm = j.value("grad_norm", 0.0);
  for (const auto& c : j.at("columns")) {
    ColumnInfo info;
    info.name = c.at("name").get<std::string>();
    info.kind = kind_from(c.at("kind").get<std::string>());
    info.donor = c.value("donor", "");
    info.recipient = c.value("recipient", "");
    info.basic_index = c.value("basic_index", Index{0});
    info.support = c.value("support", Index{0});
    m.columns.push_back(std::move(info));
  }
  if (m.columns.size() != coef.size()) throw std::invalid_argument("cox model: column count mismatch");
  return m;
}

} // namespace compatnet
