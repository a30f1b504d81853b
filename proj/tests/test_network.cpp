#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>

#include "gen.hpp"
#include "streamlearn/error.hpp"
#include "streamlearn/io.hpp"
#include "streamlearn/network.hpp"

using namespace streamlearn;

namespace {

TopologySpec topo(TopologyKind kind, int n, int degree = 0, std::uint64_t seed = 0,
                  WeightRule rule = WeightRule::metropolis) {
  TopologySpec s;
  s.kind = kind;
  s.nodes = n;
  s.degree = degree;
  s.seed = seed;
  s.weights = rule;
  return s;
}

NodeVectors random_vectors(testgen::Gen& g, int n, int d) {
  NodeVectors v(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) v(i, j) = g.normal();
  return v;
}

double deviation(const NodeVectors& v) {
  const Eigen::RowVectorXd mean = v.colwise().mean();
  return (v.rowwise() - mean).norm();
}

void check_invariants(const NetworkModel& net) {
  const int n = net.nodes;
  const Eigen::MatrixXd& a = net.weights;
  REQUIRE(a.rows() == n);
  REQUIRE(a.cols() == n);
  std::set<std::pair<int, int>> support;
  for (auto [u, v] : net.edges) {
    CHECK(u < v);
    support.insert({u, v});
  }
  CHECK(support.size() == net.edges.size());
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(a.row(i).sum() - 1) <= 1e-12);
    CHECK(std::abs(a.col(i).sum() - 1) <= 1e-12);
    CHECK(a(i, i) > 0);
    for (int j = 0; j < n; ++j) {
      CHECK(a(i, j) == a(j, i));
      CHECK(a(i, j) >= 0);
      if (i != j && a(i, j) > 0) CHECK(support.count({std::min(i, j), std::max(i, j)}) == 1);
    }
  }
  CHECK(net.lambda2 >= 0);
  CHECK(net.lambda2 < 1);
  // connectivity by graph search
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (auto [u, v] : net.edges) {
    adj[static_cast<std::size_t>(u)].push_back(v);
    adj[static_cast<std::size_t>(v)].push_back(u);
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++count;
        stack.push_back(v);
      }
  }
  CHECK(count == n);
}

}  // namespace

TEST_CASE("second eigenvalue of small graphs") {
  CHECK(build_topology(topo(TopologyKind::complete, 10, 0, 0, WeightRule::uniform)).lambda2 == doctest::Approx(0.0));
  CHECK(build_topology(topo(TopologyKind::ring, 4)).lambda2 == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(build_topology(topo(TopologyKind::star, 3)).lambda2 == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  // ring N=16: 1/3 + (2/3) cos(2 pi / 16)
  const double ring16 = 1.0 / 3.0 + 2.0 / 3.0 * std::cos(2 * M_PI / 16);
  CHECK(build_topology(topo(TopologyKind::ring, 16)).lambda2 == doctest::Approx(ring16).epsilon(1e-12));
}

TEST_CASE("topology invariants over random specs") {
  testgen::Gen g(31);
  for (int i = 0; i < 60; ++i) {
    const int n = static_cast<int>(g.integer(3, 40));
    const auto kind = static_cast<TopologyKind>(g.integer(0, 3));
    int degree = 0;
    if (kind == TopologyKind::k_regular) {
      degree = static_cast<int>(g.integer(2, std::min(8, n - 1)));
      if ((degree * n) % 2 != 0) ++degree;
      if (degree >= n) continue;
    }
    const auto rule = g.integer(0, 1) == 0 ? WeightRule::metropolis : WeightRule::uniform;
    INFO("kind=" << static_cast<int>(kind) << " N=" << n << " k=" << degree);
    const NetworkModel net = build_topology(topo(kind, n, degree, static_cast<std::uint64_t>(i), rule));
    check_invariants(net);
    if (kind == TopologyKind::k_regular) {
      std::vector<int> deg(static_cast<std::size_t>(n), 0);
      for (auto [u, v] : net.edges) ++deg[static_cast<std::size_t>(u)], ++deg[static_cast<std::size_t>(v)];
      for (int d : deg) CHECK(d == degree);
    }
  }
}

TEST_CASE("k-regular graphs are seed-deterministic") {
  const NetworkModel a = build_topology(topo(TopologyKind::k_regular, 16, 6, 42));
  const NetworkModel b = build_topology(topo(TopologyKind::k_regular, 16, 6, 42));
  CHECK(a.edges == b.edges);
  CHECK(a.lambda2 == b.lambda2);
  const NetworkModel c = build_topology(topo(TopologyKind::k_regular, 16, 6, 43));
  CHECK(a.edges != c.edges);
}

TEST_CASE("invalid topologies") {
  CHECK_THROWS_AS(build_topology(topo(TopologyKind::k_regular, 5, 3)), InvalidArgument);
  CHECK_THROWS_AS(build_topology(topo(TopologyKind::k_regular, 6, 6)), InvalidArgument);
  CHECK_THROWS_AS(build_topology(topo(TopologyKind::ring, 1)), InvalidArgument);
  // 1-regular graphs on more than two nodes are never connected
  CHECK_THROWS_AS(build_topology(topo(TopologyKind::k_regular, 6, 1)), InvalidArgument);
}

TEST_CASE("consensus rounds") {
  const NetworkModel pair = build_topology(topo(TopologyKind::complete, 2, 0, 0, WeightRule::uniform));
  NodeVectors v(2, 1);
  v << 0, 2;
  const NodeVectors once = consensus_round(pair, v);
  CHECK(once(0, 0) == 1.0);
  CHECK(once(1, 0) == 1.0);

  const NetworkModel ring = build_topology(topo(TopologyKind::ring, 8));
  NodeVectors same(8, 3);
  same.rowwise() = Eigen::RowVector3d(1.5, -2, 0.25);
  CHECK((consensus_round(ring, same) - same).norm() < 1e-14);

  testgen::Gen g(32);
  for (int trial = 0; trial < 50; ++trial) {
    const NodeVectors x = random_vectors(g, 8, 4);
    const NodeVectors y = consensus_round(ring, x);
    CHECK(deviation(y) <= (ring.lambda2 + 1e-10) * deviation(x));
    CHECK((y.colwise().mean() - x.colwise().mean()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const NodeVectors x = random_vectors(g, 8, 2);
  CHECK(consensus(ring, x, 0) == x);
}

TEST_CASE("consensus error bound and geometric decay") {
  const NetworkModel ring = build_topology(topo(TopologyKind::ring, 16));
  testgen::Gen g(33);
  const NodeVectors x = random_vectors(g, 16, 5);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const NodeVectors y = consensus(ring, x, 20);
  const double bound = std::pow(ring.lambda2, 20) * deviation(x);
  for (int i = 0; i < 16; ++i) CHECK((y.row(i) - mean).norm() <= bound + 1e-12);

  NodeVectors cur = x;
  double prev = deviation(cur);
  double ratio = 0;
  for (int r = 1; r <= 20; ++r) {
    cur = consensus_round(ring, cur);
    const double now = deviation(cur);
    ratio = now / prev;
    prev = now;
  }
  CHECK(std::abs(ratio - ring.lambda2) <= 0.05 * ring.lambda2);

  const NetworkModel complete = build_topology(topo(TopologyKind::complete, 10, 0, 0, WeightRule::uniform));
  const NodeVectors z = random_vectors(g, 10, 3);
  const NodeVectors avg = consensus(complete, z, 1);
  for (int i = 0; i < 10; ++i) CHECK((avg.row(i) - z.colwise().mean()).norm() <= 1e-12);
}

TEST_CASE("all-reduce") {
  NodeVectors v(3, 1);
  v << 1, 2, 3;
  const NodeVectors r = all_reduce(v);
  for (int i = 0; i < 3; ++i) CHECK(r(i, 0) == 2.0);

  testgen::Gen g(34);
  const NodeVectors x = random_vectors(g, 10, 6);
  const NodeVectors ar = all_reduce(x);
  for (int i = 1; i < 10; ++i)
    for (int j = 0; j < 6; ++j) CHECK(std::memcmp(&ar(i, j), &ar(0, j), sizeof(double)) == 0);
  const NetworkModel complete = build_topology(topo(TopologyKind::complete, 10, 0, 0, WeightRule::uniform));
  CHECK((ar - consensus(complete, x, 1)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(max_deviation(ar) == 0.0);

  NodeVectors same(4, 2);
  same.rowwise() = Eigen::RowVector2d(0.1, 0.7);
  CHECK(all_reduce(same) == same);
}

TEST_CASE("weights dump") {
  const auto path = std::filesystem::temp_directory_path() / "streamlearn_weights_test.csv";
  const NetworkModel ring = build_topology(topo(TopologyKind::ring, 4));
  write_weights_csv(ring, path);
  const std::string text = read_text_file(path);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 4);
  const auto first = split_csv_line(text.substr(0, text.find('\n')));
  REQUIRE(first.size() == 4);
  CHECK(parse_double(first[0]) == doctest::Approx(1.0 / 3.0));
  std::filesystem::remove(path);
}
