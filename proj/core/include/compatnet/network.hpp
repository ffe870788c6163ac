#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "compatnet/types.hpp"

namespace compatnet {

enum class NetworkErrc {
  MalformedRow,
  DuplicatePair,
  NonPositiveStdErr,
  UnknownLabel,
  DuplicateLabel,
  InvalidNetwork,
  Io,
};

const char* to_string(NetworkErrc code);

/// Validation or parse failure. `row()` is the 1-based line number in the
/// offending file (the header is line 1), or 0 when not tied to a file row.
class NetworkError : public std::runtime_error {
public:
  NetworkError(NetworkErrc code, const std::string& what, std::size_t row = 0);

  NetworkErrc code() const noexcept { return code_; }
  std::size_t row() const noexcept { return row_; }

private:
  NetworkErrc code_;
  std::size_t row_;
};

/// Raw field bundle used to build a CompatibilityNetwork.
struct NetworkData {
  std::vector<std::string> donor_labels;
  std::vector<std::string> recipient_labels;
  Vector donor_weight;
  Vector donor_se;
  Vector recipient_weight;
  Vector recipient_se;
  Matrix edge_weight; // N_d x N_r
  Matrix edge_se;     // N_d x N_r
  Mask edge_mask;     // true where the pair was observed
};

/// Bipartite signed weighted network whose node and edge weights are noisy
/// estimates with per-observation standard errors. Donors index rows,
/// recipients index columns. Immutable once constructed.
///
/// Entries at unobserved positions are canonicalized to weight 0 and
/// standard error 0; they never enter likelihoods or metrics.
class CompatibilityNetwork {
public:
  /// Validates and takes ownership. Throws NetworkError on any violated
  /// invariant; nothing is constructed in that case.
  explicit CompatibilityNetwork(NetworkData data);

  Index n_donors() const { return static_cast<Index>(data_.donor_labels.size()); }
  Index n_recipients() const { return static_cast<Index>(data_.recipient_labels.size()); }
  Index n_observed() const { return static_cast<Index>(data_.edge_mask.count()); }

  const std::vector<std::string>& donor_labels() const { return data_.donor_labels; }
  const std::vector<std::string>& recipient_labels() const { return data_.recipient_labels; }
  const Vector& donor_weight() const { return data_.donor_weight; }
  const Vector& donor_se() const { return data_.donor_se; }
  const Vector& recipient_weight() const { return data_.recipient_weight; }
  const Vector& recipient_se() const { return data_.recipient_se; }
  const Matrix& edge_weight() const { return data_.edge_weight; }
  const Matrix& edge_se() const { return data_.edge_se; }
  const Mask& edge_mask() const { return data_.edge_mask; }
  bool observed(Index i, Index j) const { return data_.edge_mask(i, j); }

  const NetworkData& data() const { return data_; }

  /// Observed compatibility y_d[i] + y_r[j] + w[i,j] for every pair
  /// (masked pairs use w = 0).
  Matrix compatibility_matrix() const;

  /// Standard error of the observed compatibility, treating the three
  /// estimates as independent.
  Matrix compatibility_se() const;

  bool operator==(const CompatibilityNetwork& other) const;

private:
  NetworkData data_;
};

struct NetworkPair {
  Index donor_index = 0;
  Index recipient_index = 0;
};

/// All masked-true pairs in row-major order.
std::vector<NetworkPair> observed_pairs(const CompatibilityNetwork& net);

/// Compatibility of a donor type, recipient type and their pair: delta + gamma + eta.
inline double compatibility(double delta, double gamma, double eta) { return delta + gamma + eta; }

inline constexpr const char* kEdgesFile = "edges.csv";
inline constexpr const char* kDonorNodesFile = "donor_nodes.csv";
inline constexpr const char* kRecipientNodesFile = "recipient_nodes.csv";

CompatibilityNetwork load_network(const std::filesystem::path& edges_path,
                                  const std::filesystem::path& donor_nodes_path,
                                  const std::filesystem::path& recipient_nodes_path);

/// Loads edges.csv, donor_nodes.csv and recipient_nodes.csv from `dir`.
CompatibilityNetwork load_network(const std::filesystem::path& dir);

/// Writes the three CSV files into `dir`, creating it if needed.
void save_network(const CompatibilityNetwork& net, const std::filesystem::path& dir);

} // namespace compatnet
