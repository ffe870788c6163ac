#include <doctest.h>

#include <fstream>

#include "compatnet/network.hpp"
#include "fixtures.hpp"

using namespace compatnet;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::filesystem::path one_by_two(const std::string& name, const std::string& edges) {
  const auto dir = fixture::temp_dir(name);
  write(dir / "edges.csv", "donor,recipient,weight,stderr\n" + edges);
  write(dir / "donor_nodes.csv", "node,weight,stderr\nA1,0.1,0.2\n");
  write(dir / "recipient_nodes.csv", "node,weight,stderr\na1,-0.3,0.4\na2,0.5,0.6\n");
  return dir;
}

} // namespace

TEST_CASE("single edge parses") {
  const auto dir = fixture::temp_dir("single");
  write(dir / "edges.csv", "donor,recipient,weight,stderr\nA1,a1,0.25,0.10\n");
  write(dir / "donor_nodes.csv", "node,weight,stderr\nA1,0.1,0.2\n");
  write(dir / "recipient_nodes.csv", "node,weight,stderr\na1,-0.3,0.4\n");
  const auto net = load_network(dir);
  CHECK(net.n_donors() == 1);
  CHECK(net.n_recipients() == 1);
  CHECK(net.edge_weight()(0, 0) == 0.25);
  CHECK(net.edge_se()(0, 0) == 0.10);
  CHECK(net.observed(0, 0));
  std::filesystem::remove_all(dir);
}

TEST_CASE("omitted pair is masked") {
  const auto dir = one_by_two("omit", "A1,a1,0.25,0.10\n");
  const auto net = load_network(dir);
  CHECK(net.observed(0, 0));
  CHECK_FALSE(net.observed(0, 1));
  CHECK(net.edge_weight()(0, 1) == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("zero stderr is rejected with its row") {
  const auto dir = one_by_two("zero-se", "A1,a1,0.25,0.10\nA1,a2,0.5,0.0\n");
  try {
    load_network(dir);
    FAIL("expected NetworkError");
  } catch (const NetworkError& e) {
    CHECK(e.code() == NetworkErrc::NonPositiveStdErr);
    CHECK(e.row() == 3);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("load errors") {
  SUBCASE("duplicate pair") {
    const auto dir = one_by_two("dup", "A1,a1,0.25,0.10\nA1,a1,0.3,0.1\n");
    CHECK_THROWS_AS(load_network(dir), NetworkError);
    try {
      load_network(dir);
    } catch (const NetworkError& e) {
      CHECK(e.code() == NetworkErrc::DuplicatePair);
      CHECK(e.row() == 3);
    }
    std::filesystem::remove_all(dir);
  }
  SUBCASE("unknown label") {
    const auto dir = one_by_two("unknown", "A9,a1,0.25,0.10\n");
    try {
      load_network(dir);
      FAIL("expected NetworkError");
    } catch (const NetworkError& e) {
      CHECK(e.code() == NetworkErrc::UnknownLabel);
    }
    std::filesystem::remove_all(dir);
  }
  SUBCASE("malformed") {
    const auto dir = one_by_two("malformed", "A1,a1,abc,0.10\n");
    try {
      load_network(dir);
      FAIL("expected NetworkError");
    } catch (const NetworkError& e) {
      CHECK(e.code() == NetworkErrc::MalformedRow);
      CHECK(e.row() == 2);
    }
    std::filesystem::remove_all(dir);
  }
  SUBCASE("missing files") {
    try {
      load_network(fixture::temp_dir("absent"));
      FAIL("expected NetworkError");
    } catch (const NetworkError& e) {
      CHECK(e.code() == NetworkErrc::Io);
    }
  }
}

TEST_CASE("save and load round trip") {
  for (const double missing : {0.0, 0.5}) {
    const auto net = fixture::random_network(3, 4, missing, 11);
    const auto dir = fixture::temp_dir("roundtrip") / "nested" / "dir";
    save_network(net, dir);
    const auto back = load_network(dir);
    CHECK(back == net);
    CHECK((back.edge_mask() == net.edge_mask()).all());
    CHECK(back.edge_weight() == net.edge_weight());
    CHECK(back.donor_se() == net.donor_se());
    std::filesystem::remove_all(dir.parent_path().parent_path());
  }
}

TEST_CASE("mask pattern survives a half-missing round trip") {
  const auto net = fixture::random_network(10, 10, 0.5, 3);
  CHECK(net.n_observed() < 100);
  const auto dir = fixture::temp_dir("half");
  save_network(net, dir);
  CHECK((load_network(dir).edge_mask() == net.edge_mask()).all());
  std::filesystem::remove_all(dir);
}

TEST_CASE("constructor validation") {
  auto base = fixture::random_network(2, 2, 0.0, 5).data();
  SUBCASE("non-positive node stderr") {
    base.donor_se(0) = -1.0;
    CHECK_THROWS_AS(CompatibilityNetwork{base}, NetworkError);
  }
  SUBCASE("duplicate labels") {
    base.recipient_labels[1] = base.recipient_labels[0];
    CHECK_THROWS_AS(CompatibilityNetwork{base}, NetworkError);
  }
  SUBCASE("shape mismatch") {
    base.edge_weight.resize(3, 2);
    CHECK_THROWS_AS(CompatibilityNetwork{base}, NetworkError);
  }
  SUBCASE("masked entries are canonicalized") {
    base.edge_mask(1, 1) = false;
    base.edge_weight(1, 1) = 99.0;
    base.edge_se(1, 1) = -3.0;
    const CompatibilityNetwork net(base);
    CHECK(net.edge_weight()(1, 1) == 0.0);
    CHECK(net.edge_se()(1, 1) == 0.0);
  }
}

TEST_CASE("compatibility sums its parts") {
  CHECK(compatibility(0.1, 0.2, -0.05) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(compatibility(0.0, 0.0, 0.0) == 0.0);
  CHECK(compatibility(-0.3, 0.3, 0.0) == 0.0);
}

TEST_CASE("compatibility matrix and standard error") {
  const auto net = fixture::random_network(3, 2, 0.3, 9);
  const Matrix mu = net.compatibility_matrix();
  const Matrix se = net.compatibility_se();
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 2; ++j) {
      CHECK(mu(i, j) == doctest::Approx(net.donor_weight()(i) + net.recipient_weight()(j) + net.edge_weight()(i, j)));
      const double v = net.donor_se()(i) * net.donor_se()(i) + net.recipient_se()(j) * net.recipient_se()(j) +
                       net.edge_se()(i, j) * net.edge_se()(i, j);
      CHECK(se(i, j) == doctest::Approx(std::sqrt(v)));
    }
}

TEST_CASE("observed pairs are row-major") {
  const auto net = fixture::random_network(4, 3, 0.4, 2);
  const auto pairs = observed_pairs(net);
  CHECK(static_cast<Index>(pairs.size()) == net.n_observed());
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const auto a = pairs[k - 1].donor_index * 3 + pairs[k - 1].recipient_index;
    const auto b = pairs[k].donor_index * 3 + pairs[k].recipient_index;
    CHECK(a < b);
  }
}
