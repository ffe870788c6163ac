#include "compatnet/network.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "compatnet/io.hpp"

namespace compatnet {

const char* to_string(NetworkErrc code) {
  switch (code) {
    case NetworkErrc::MalformedRow: return "MalformedRow";
    case NetworkErrc::DuplicatePair: return "DuplicatePair";
    case NetworkErrc::NonPositiveStdErr: return "NonPositiveStdErr";
    case NetworkErrc::UnknownLabel: return "UnknownLabel";
    case NetworkErrc::DuplicateLabel: return "DuplicateLabel";
    case NetworkErrc::InvalidNetwork: return "InvalidNetwork";
    case NetworkErrc::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string decorate(NetworkErrc code, const std::string& what, std::size_t row) {
  std::ostringstream os;
  os << to_string(code);
  if (row > 0) os << " at row " << row;
  os << ": " << what;
  return os.str();
}

void check_labels(const std::vector<std::string>& labels, const char* side) {
  if (labels.empty())
    throw NetworkError(NetworkErrc::InvalidNetwork, std::string("no ") + side + " nodes");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second)
      throw NetworkError(NetworkErrc::DuplicateLabel, std::string("duplicate ") + side + " label '" + l + "'");
  }
}

void check_nodes(const Vector& weight, const Vector& se, std::size_t n, const char* side) {
  if (static_cast<std::size_t>(weight.size()) != n || static_cast<std::size_t>(se.size()) != n)
    throw NetworkError(NetworkErrc::InvalidNetwork, std::string(side) + " weight/se length mismatch");
  for (Index k = 0; k < weight.size(); ++k) {
    if (!std::isfinite(weight(k)))
      throw NetworkError(NetworkErrc::InvalidNetwork, std::string("non-finite ") + side + " weight");
    if (!(se(k) > 0.0) || !std::isfinite(se(k)))
      throw NetworkError(NetworkErrc::NonPositiveStdErr, std::string(side) + " standard error must be positive");
  }
}

} // namespace

NetworkError::NetworkError(NetworkErrc code, const std::string& what, std::size_t row)
    : std::runtime_error(decorate(code, what, row)), code_(code), row_(row) {}

CompatibilityNetwork::CompatibilityNetwork(NetworkData data) {
  check_labels(data.donor_labels, "donor");
  check_labels(data.recipient_labels, "recipient");
  const auto nd = data.donor_labels.size();
  const auto nr = data.recipient_labels.size();
  check_nodes(data.donor_weight, data.donor_se, nd, "donor");
  check_nodes(data.recipient_weight, data.recipient_se, nr, "recipient");

  const auto rows = static_cast<Index>(nd);
  const auto cols = static_cast<Index>(nr);
  if (data.edge_weight.rows() != rows || data.edge_weight.cols() != cols || data.edge_se.rows() != rows ||
      data.edge_se.cols() != cols || data.edge_mask.rows() != rows || data.edge_mask.cols() != cols)
    throw NetworkError(NetworkErrc::InvalidNetwork, "edge matrices must be N_d x N_r");
  if (data.edge_mask.count() == 0)
    throw NetworkError(NetworkErrc::InvalidNetwork, "network has no observed edges");

  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!data.edge_mask(i, j)) {
        data.edge_weight(i, j) = 0.0;
        data.edge_se(i, j) = 0.0;
        continue;
      }
      if (!std::isfinite(data.edge_weight(i, j)))
        throw NetworkError(NetworkErrc::InvalidNetwork, "non-finite edge weight");
      if (!(data.edge_se(i, j) > 0.0) || !std::isfinite(data.edge_se(i, j)))
        throw NetworkError(NetworkErrc::NonPositiveStdErr, "edge standard error must be positive");
    }
  }
  data_ = std::move(data);
}

Matrix CompatibilityNetwork::compatibility_matrix() const {
  Matrix mu = data_.edge_weight;
  mu.colwise() += data_.donor_weight;
  mu.rowwise() += data_.recipient_weight.transpose();
  return mu;
}

Matrix CompatibilityNetwork::compatibility_se() const {
  Matrix var = data_.edge_se.array().square().matrix();
  var.colwise() += data_.donor_se.array().square().matrix();
  var.rowwise() += data_.recipient_se.array().square().matrix().transpose();
  return var.array().sqrt().matrix();
}

bool CompatibilityNetwork::operator==(const CompatibilityNetwork& other) const {
  const auto& a = data_;
  const auto& b = other.data_;
  return a.donor_labels == b.donor_labels && a.recipient_labels == b.recipient_labels &&
         a.donor_weight == b.donor_weight && a.donor_se == b.donor_se &&
         a.recipient_weight == b.recipient_weight && a.recipient_se == b.recipient_se &&
         a.edge_weight == b.edge_weight && a.edge_se == b.edge_se && (a.edge_mask == b.edge_mask).all();
}

std::vector<NetworkPair> observed_pairs(const CompatibilityNetwork& net) {
  std::vector<NetworkPair> pairs;
  pairs.reserve(static_cast<std::size_t>(net.n_observed()));
  for (Index i = 0; i < net.n_donors(); ++i)
    for (Index j = 0; j < net.n_recipients(); ++j)
      if (net.observed(i, j)) pairs.push_back({i, j});
  return pairs;
}

namespace {

struct NodeTable {
  std::vector<std::string> labels;
  std::vector<double> weight;
  std::vector<double> se;
};

std::vector<std::string> read_or_throw(const std::filesystem::path& path) {
  try {
    return io::read_lines(path);
  } catch (const std::exception& e) {
    throw NetworkError(NetworkErrc::Io, e.what());
  }
}

void expect_header(const std::vector<std::string>& lines, const std::string& header,
                   const std::filesystem::path& path) {
  if (lines.empty() || io::split_csv_line(lines.front()) != io::split_csv_line(header))
    throw NetworkError(NetworkErrc::MalformedRow, path.filename().string() + ": expected header '" + header + "'", 1);
}

NodeTable read_nodes(const std::filesystem::path& path) {
  const auto lines = read_or_throw(path);
  expect_header(lines, "node,weight,stderr", path);
  NodeTable t;
  std::unordered_set<std::string> seen;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::size_t row = k + 1;
    if (lines[k].empty()) continue;
    const auto f = io::split_csv_line(lines[k]);
    double w = 0.0, se = 0.0;
    if (f.size() != 3 || f[0].empty() || !io::parse_double(f[1], w) || !io::parse_double(f[2], se))
      throw NetworkError(NetworkErrc::MalformedRow, path.filename().string() + ": '" + lines[k] + "'", row);
    if (!std::isfinite(w))
      throw NetworkError(NetworkErrc::MalformedRow, path.filename().string() + ": non-finite weight", row);
    if (!(se > 0.0) || !std::isfinite(se))
      throw NetworkError(NetworkErrc::NonPositiveStdErr, path.filename().string() + ": stderr " + f[2], row);
    if (!seen.insert(f[0]).second)
      throw NetworkError(NetworkErrc::DuplicateLabel, path.filename().string() + ": node '" + f[0] + "'", row);
    t.labels.push_back(f[0]);
    t.weight.push_back(w);
    t.se.push_back(se);
  }
  return t;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::unordered_map<std::string, Index> index_of(const std::vector<std::string>& labels) {
  std::unordered_map<std::string, Index> m;
  for (std::size_t k = 0; k < labels.size(); ++k) m.emplace(labels[k], static_cast<Index>(k));
  return m;
}

} // namespace

CompatibilityNetwork load_network(const std::filesystem::path& edges_path,
                                  const std::filesystem::path& donor_nodes_path,
                                  const std::filesystem::path& recipient_nodes_path) {
  auto donors = read_nodes(donor_nodes_path);
  auto recipients = read_nodes(recipient_nodes_path);
  const auto nd = static_cast<Index>(donors.labels.size());
  const auto nr = static_cast<Index>(recipients.labels.size());

  NetworkData data;
  data.edge_weight = Matrix::Zero(nd, nr);
  data.edge_se = Matrix::Zero(nd, nr);
  data.edge_mask = Mask::Constant(nd, nr, false);

  const auto donor_index = index_of(donors.labels);
  const auto recipient_index = index_of(recipients.labels);
  const auto lines = read_or_throw(edges_path);
  expect_header(lines, "donor,recipient,weight,stderr", edges_path);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::size_t row = k + 1;
    if (lines[k].empty()) continue;
    const auto f = io::split_csv_line(lines[k]);
    double w = 0.0, se = 0.0;
    if (f.size() != 4 || !io::parse_double(f[2], w) || !io::parse_double(f[3], se) || !std::isfinite(w))
      throw NetworkError(NetworkErrc::MalformedRow, "edges: '" + lines[k] + "'", row);
    const auto di = donor_index.find(f[0]);
    if (di == donor_index.end()) throw NetworkError(NetworkErrc::UnknownLabel, "edges: donor '" + f[0] + "'", row);
    const auto rj = recipient_index.find(f[1]);
    if (rj == recipient_index.end())
      throw NetworkError(NetworkErrc::UnknownLabel, "edges: recipient '" + f[1] + "'", row);
    if (!(se > 0.0) || !std::isfinite(se))
      throw NetworkError(NetworkErrc::NonPositiveStdErr, "edges: stderr " + f[3], row);
    const Index i = di->second, j = rj->second;
    if (data.edge_mask(i, j))
      throw NetworkError(NetworkErrc::DuplicatePair, "edges: pair (" + f[0] + ", " + f[1] + ")", row);
    data.edge_mask(i, j) = true;
    data.edge_weight(i, j) = w;
    data.edge_se(i, j) = se;
  }

  data.donor_weight = to_vector(donors.weight);
  data.donor_se = to_vector(donors.se);
  data.recipient_weight = to_vector(recipients.weight);
  data.recipient_se = to_vector(recipients.se);
  data.donor_labels = std::move(donors.labels);
  data.recipient_labels = std::move(recipients.labels);
  return CompatibilityNetwork(std::move(data));
}

CompatibilityNetwork load_network(const std::filesystem::path& dir) {
  return load_network(dir / kEdgesFile, dir / kDonorNodesFile, dir / kRecipientNodesFile);
}

void save_network(const CompatibilityNetwork& net, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw NetworkError(NetworkErrc::Io, "cannot create " + dir.string() + ": " + ec.message());

  auto node_csv = [](const std::vector<std::string>& labels, const Vector& w, const Vector& se) {
    std::string out = "node,weight,stderr\n";
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const auto idx = static_cast<Index>(k);
      out += labels[k] + ',' + io::format_double(w(idx)) + ',' + io::format_double(se(idx)) + '\n';
    }
    return out;
  };

  std::string edges = "donor,recipient,weight,stderr\n";
  for (const auto& p : observed_pairs(net)) {
    edges += net.donor_labels()[static_cast<std::size_t>(p.donor_index)] + ',' +
             net.recipient_labels()[static_cast<std::size_t>(p.recipient_index)] + ',' +
             io::format_double(net.edge_weight()(p.donor_index, p.recipient_index)) + ',' +
             io::format_double(net.edge_se()(p.donor_index, p.recipient_index)) + '\n';
  }

  try {
    io::write_file_atomic(dir / kDonorNodesFile, node_csv(net.donor_labels(), net.donor_weight(), net.donor_se()));
    io::write_file_atomic(dir / kRecipientNodesFile,
                          node_csv(net.recipient_labels(), net.recipient_weight(), net.recipient_se()));
    io::write_file_atomic(dir / kEdgesFile, edges);
  } catch (const NetworkError&) {
    throw;
  } catch (const std::exception& e) {
    throw NetworkError(NetworkErrc::Io, e.what());
  }
}

} // namespace compatnet
