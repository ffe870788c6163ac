#include "compatnet/transplant.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "compatnet/io.hpp"
#include "compatnet/rng.hpp"

namespace compatnet {

void TransplantDataset::validate() const {
  const auto n = static_cast<std::size_t>(time.size());
  if (static_cast<std::size_t>(covariates.rows()) != n || donor_type.size() != n || recipient_type.size() != n ||
      event.size() != n)
    throw std::invalid_argument("TransplantDataset: field lengths differ");
  if (n > 0 && !(time.minCoeff() > 0.0)) throw std::invalid_argument("TransplantDataset: times must be positive");
  if (std::none_of(event.begin(), event.end(), [](auto e) { return e != 0; }))
    throw std::invalid_argument("TransplantDataset: at least one event is required");
}

TransplantDataset TransplantDataset::subset(const std::vector<Index>& rows) const {
  TransplantDataset out;
  const auto m = static_cast<Index>(rows.size());
  out.covariates.resize(m, covariates.cols());
  out.time.resize(m);
  for (Index k = 0; k < m; ++k) {
    const Index r = rows[static_cast<std::size_t>(k)];
    out.covariates.row(k) = covariates.row(r);
    out.time(k) = time(r);
    out.donor_type.push_back(donor_type[static_cast<std::size_t>(r)]);
    out.recipient_type.push_back(recipient_type[static_cast<std::size_t>(r)]);
    out.event.push_back(event[static_cast<std::size_t>(r)]);
  }
  return out;
}

void save_dataset(const TransplantDataset& data, const std::filesystem::path& path) {
  std::string out = "id,time,event,donor_type,recipient_type";
  for (Index k = 0; k < data.covariates.cols(); ++k) out += ",x" + std::to_string(k + 1);
  out += '\n';
  for (Index i = 0; i < data.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out += std::to_string(i + 1) + ',' + io::format_double(data.time(i)) + ',' + (data.event[s] ? "1" : "0") + ',' +
           data.donor_type[s] + ',' + data.recipient_type[s];
    for (Index k = 0; k < data.covariates.cols(); ++k) out += ',' + io::format_double(data.covariates(i, k));
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

TransplantDataset load_dataset(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty()) throw std::runtime_error(path.string() + ": empty file");
  const auto header = io::split_csv_line(lines.front());
  const std::vector<std::string> fixed{"id", "time", "event", "donor_type", "recipient_type"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    throw std::runtime_error(path.string() + ": expected header 'id,time,event,donor_type,recipient_type,x1..xp'");
  const std::size_t p = header.size() - fixed.size();
  for (std::size_t k = 0; k < p; ++k)
    if (header[fixed.size() + k] != "x" + std::to_string(k + 1))
      throw std::runtime_error(path.string() + ": covariate columns must be named x1..xp");

  std::vector<double> times, covs;
  TransplantDataset d;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (lines[l].empty()) continue;
    const auto f = io::split_csv_line(lines[l]);
    const auto row_error = [&](const std::string& what) {
      return std::runtime_error(path.string() + ": row " + std::to_string(l + 1) + ": " + what);
    };
    if (f.size() != header.size()) throw row_error("wrong number of fields");
    double t = 0.0;
    if (!io::parse_double(f[1], t) || !(t > 0.0)) throw row_error("time must be a positive number");
    if (f[2] != "0" && f[2] != "1") throw row_error("event must be 0 or 1");
    times.push_back(t);
    d.event.push_back(f[2] == "1" ? 1 : 0);
    d.donor_type.push_back(f[3]);
    d.recipient_type.push_back(f[4]);
    for (std::size_t k = 0; k < p; ++k) {
      double x = 0.0;
      if (!io::parse_double(f[fixed.size() + k], x)) throw row_error("bad covariate value");
      covs.push_back(x);
    }
  }
  const auto n = static_cast<Index>(times.size());
  d.time = Eigen::Map<const Vector>(times.data(), n);
  d.covariates = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      covs.data(), n, static_cast<Index>(p));
  d.validate();
  return d;
}

namespace {

std::string donor_column(const std::string& d) { return "DON_" + d; }
std::string recipient_column(const std::string& r) { return "REC_" + r; }

} // namespace

DesignMatrix design_matrix(const TransplantDataset& data, Index min_count) {
  if (min_count < 1) throw std::invalid_argument("design_matrix: min_count must be >= 1");
  std::map<std::string, Index> donor_counts, recipient_counts;
  std::map<std::pair<std::string, std::string>, Index> pair_counts;
  for (Index i = 0; i < data.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    ++donor_counts[data.donor_type[s]];
    ++recipient_counts[data.recipient_type[s]];
    ++pair_counts[{data.donor_type[s], data.recipient_type[s]}];
  }
  std::vector<ColumnInfo> cols;
  for (Index k = 0; k < data.covariates.cols(); ++k) {
    ColumnInfo c;
    c.kind = ColumnKind::Basic;
    c.name = "x" + std::to_string(k + 1);
    c.basic_index = k;
    cols.push_back(c);
  }
  for (const auto& [d, n] : donor_counts) {
    if (n < min_count) continue;
    ColumnInfo c;
    c.kind = ColumnKind::DonorType;
    c.name = donor_column(d);
    c.donor = d;
    cols.push_back(c);
  }
  for (const auto& [r, n] : recipient_counts) {
    if (n < min_count) continue;
    ColumnInfo c;
    c.kind = ColumnKind::RecipientType;
    c.name = recipient_column(r);
    c.recipient = r;
    cols.push_back(c);
  }
  for (const auto& [key, n] : pair_counts) {
    if (n < min_count) continue;
    ColumnInfo c;
    c.kind = ColumnKind::Pair;
    c.name = donor_column(key.first) + "_" + recipient_column(key.second);
    c.donor = key.first;
    c.recipient = key.second;
    cols.push_back(c);
  }
  return apply_design(data, cols);
}

DesignMatrix apply_design(const TransplantDataset& data, const std::vector<ColumnInfo>& columns) {
  DesignMatrix out;
  out.columns = columns;
  const Index n = data.size();
  out.x = Matrix::Zero(n, static_cast<Index>(columns.size()));

  std::map<std::string, Index> donor_col, recipient_col;
  std::map<std::pair<std::string, std::string>, Index> pair_col;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const auto& c = columns[k];
    const auto idx = static_cast<Index>(k);
    switch (c.kind) {
      case ColumnKind::Basic:
        if (c.basic_index < 0 || c.basic_index >= data.covariates.cols())
          throw std::invalid_argument("apply_design: basic covariate index out of range");
        out.x.col(idx) = data.covariates.col(c.basic_index);
        break;
      case ColumnKind::DonorType: donor_col[c.donor] = idx; break;
      case ColumnKind::RecipientType: recipient_col[c.recipient] = idx; break;
      case ColumnKind::Pair: pair_col[{c.donor, c.recipient}] = idx; break;
    }
  }
  for (Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (auto it = donor_col.find(data.donor_type[s]); it != donor_col.end()) out.x(i, it->second) = 1.0;
    if (auto it = recipient_col.find(data.recipient_type[s]); it != recipient_col.end()) out.x(i, it->second) = 1.0;
    if (auto it = pair_col.find({data.donor_type[s], data.recipient_type[s]}); it != pair_col.end())
      out.x(i, it->second) = 1.0;
  }
  for (std::size_t k = 0; k < columns.size(); ++k)
    out.columns[k].support = (out.x.col(static_cast<Index>(k)).array() != 0.0).count();
  return out;
}

void TransplantGenConfig::validate() const {
  if (n_per_split < 2) throw std::invalid_argument("TransplantGenConfig: n_per_split must be >= 2");
  if (n_donor_types < 1 || n_recipient_types < 1)
    throw std::invalid_argument("TransplantGenConfig: type counts must be >= 1");
  if (n_basic < 0) throw std::invalid_argument("TransplantGenConfig: n_basic must be >= 0");
  if (!(baseline_hazard > 0.0)) throw std::invalid_argument("TransplantGenConfig: baseline_hazard must be > 0");
  if (!(censor_fraction > 0.0 && censor_fraction < 1.0))
    throw std::invalid_argument("TransplantGenConfig: censor_fraction must be in (0, 1)");
  if (!(effect_scale >= 0.0) || !(basic_coef_std >= 0.0))
    throw std::invalid_argument("TransplantGenConfig: scales must be >= 0");
}

Vector true_linear_predictor(const TransplantDataset& data, const TransplantTruth& truth) {
  std::map<std::string, Index> di, rj;
  for (std::size_t k = 0; k < truth.donor_types.size(); ++k) di[truth.donor_types[k]] = static_cast<Index>(k);
  for (std::size_t k = 0; k < truth.recipient_types.size(); ++k) rj[truth.recipient_types[k]] = static_cast<Index>(k);
  Vector lp = data.covariates * truth.basic_coefficients;
  for (Index s = 0; s < lp.size(); ++s) {
    const Index i = di.at(data.donor_type[static_cast<std::size_t>(s)]);
    const Index j = rj.at(data.recipient_type[static_cast<std::size_t>(s)]);
    lp(s) -= truth.delta(i) + truth.gamma(j) + truth.eta(i, j);
  }
  return lp;
}

namespace {

struct Cohort {
  TransplantDataset data;
  Vector event_time;
  Vector censor_unit; // standard exponential draws, scaled by the censoring rate later
};

Cohort draw_cohort(const TransplantGenConfig& c, const TransplantTruth& truth, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_int_distribution<Index> donor_pick(0, c.n_donor_types - 1);
  std::uniform_int_distribution<Index> recipient_pick(0, c.n_recipient_types - 1);
  Cohort out;
  const Index n = c.n_per_split;
  out.data.covariates.resize(n, c.n_basic);
  out.event_time.resize(n);
  out.censor_unit.resize(n);
  for (Index s = 0; s < n; ++s) {
    for (Index k = 0; k < c.n_basic; ++k) out.data.covariates(s, k) = normal(rng);
    out.data.donor_type.push_back(truth.donor_types[static_cast<std::size_t>(donor_pick(rng))]);
    out.data.recipient_type.push_back(truth.recipient_types[static_cast<std::size_t>(recipient_pick(rng))]);
    out.event_time(s) = expo(rng);
    out.censor_unit(s) = expo(rng);
  }
  const Vector lp = true_linear_predictor(out.data, truth);
  out.event_time.array() /= c.baseline_hazard * lp.array().exp();
  out.data.time = out.event_time; // placeholder until censoring is applied
  return out;
}

// Rate c solving mean_i c / (c + h_i) = target, the expected censored
// fraction under independent exponential censoring.
double solve_censor_rate(const std::vector<double>& hazards, double target) {
  auto censored = [&](double log_c) {
    const double c = std::exp(log_c);
    double s = 0.0;
    for (double h : hazards) s += c / (c + h);
    return s / static_cast<double>(hazards.size());
  };
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (censored(mid) < target ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

void apply_censoring(Cohort& cohort, double rate) {
  for (Index s = 0; s < cohort.data.size(); ++s) {
    const double c = cohort.censor_unit(s) / rate;
    const double t = cohort.event_time(s);
    cohort.data.time(s) = std::min(t, c);
    cohort.data.event.push_back(t <= c ? 1 : 0);
  }
}

} // namespace

TransplantSimulation simulate_transplants(const TransplantGenConfig& config) {
  config.validate();
  SimConfig latent = config.latent;
  latent.n_d = config.n_donor_types;
  latent.n_r = config.n_recipient_types;
  latent.seed = stream_seed(config.seed, "transplant-latent");
  // Truth only; the simulated network's observation noise is not used.
  const auto planted = simulate(latent).truth;

  TransplantSimulation sim;
  auto& truth = sim.truth;
  truth.latent = planted;
  for (Index i = 0; i < config.n_donor_types; ++i) truth.donor_types.push_back("A" + std::to_string(i + 1));
  for (Index j = 0; j < config.n_recipient_types; ++j) truth.recipient_types.push_back("a" + std::to_string(j + 1));
  truth.delta = config.effect_scale * planted.delta;
  truth.gamma = config.effect_scale * planted.gamma;
  truth.eta.resize(config.n_donor_types, config.n_recipient_types);
  for (Index i = 0; i < config.n_donor_types; ++i)
    for (Index j = 0; j < config.n_recipient_types; ++j)
      truth.eta(i, j) = config.effect_scale * pair_affinity(planted, i, j);

  auto rng = make_rng(config.seed, "transplant-cohort");
  if (config.destroy_structure) {
    auto perm_rng = make_rng(config.seed, "transplant-permute");
    std::vector<double> values(truth.eta.data(), truth.eta.data() + truth.eta.size());
    std::shuffle(values.begin(), values.end(), perm_rng);
    truth.eta = Eigen::Map<const Matrix>(values.data(), truth.eta.rows(), truth.eta.cols());
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  truth.basic_coefficients.resize(config.n_basic);
  for (Index k = 0; k < config.n_basic; ++k) truth.basic_coefficients(k) = config.basic_coef_std * normal(rng);

  Cohort train = draw_cohort(config, truth, rng);
  Cohort test = draw_cohort(config, truth, rng);

  std::vector<double> hazards;
  for (const Cohort* c : {&train, &test}) {
    const Vector lp = true_linear_predictor(c->data, truth);
    for (Index s = 0; s < lp.size(); ++s) hazards.push_back(config.baseline_hazard * std::exp(lp(s)));
  }
  truth.censor_rate = solve_censor_rate(hazards, config.censor_fraction);
  apply_censoring(train, truth.censor_rate);
  apply_censoring(test, truth.censor_rate);

  sim.train = std::move(train.data);
  sim.test = std::move(test.data);
  sim.train.validate();
  sim.test.validate();
  return sim;
}

nlohmann::json to_json(const TransplantGenConfig& c) {
  return {{"n_per_split", c.n_per_split},
          {"n_donor_types", c.n_donor_types},
          {"n_recipient_types", c.n_recipient_types},
          {"n_basic", c.n_basic},
          {"latent", to_json(c.latent)},
          {"effect_scale", c.effect_scale},
          {"basic_coef_std", c.basic_coef_std},
          {"baseline_hazard", c.baseline_hazard},
          {"censor_fraction", c.censor_fraction},
          {"destroy_structure", c.destroy_structure},
          {"seed", c.seed}};
}

TransplantGenConfig transplant_config_from_json(const nlohmann::json& j) {
  TransplantGenConfig c;
  c.n_per_split = j.value("n_per_split", c.n_per_split);
  c.n_donor_types = j.value("n_donor_types", c.n_donor_types);
  c.n_recipient_types = j.value("n_recipient_types", c.n_recipient_types);
  c.n_basic = j.value("n_basic", c.n_basic);
  if (j.contains("latent")) c.latent = sim_config_from_json(j.at("latent"));
  c.effect_scale = j.value("effect_scale", c.effect_scale);
  c.basic_coef_std = j.value("basic_coef_std", c.basic_coef_std);
  c.baseline_hazard = j.value("baseline_hazard", c.baseline_hazard);
  c.censor_fraction = j.value("censor_fraction", c.censor_fraction);
  c.destroy_structure = j.value("destroy_structure", c.destroy_structure);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json to_json(const TransplantTruth& t) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json eta = nlohmann::json::array();
  for (Index i = 0; i < t.eta.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(t.eta.cols()));
    for (Index j = 0; j < t.eta.cols(); ++j) row[static_cast<std::size_t>(j)] = t.eta(i, j);
    eta.push_back(row);
  }
  return {{"latent", to_json(t.latent)},
          {"donor_types", t.donor_types},
          {"recipient_types", t.recipient_types},
          {"delta", vec(t.delta)},
          {"gamma", vec(t.gamma)},
          {"eta", std::move(eta)},
          {"basic_coefficients", vec(t.basic_coefficients)},
          {"censor_rate", t.censor_rate}};
}

} // namespace compatnet
