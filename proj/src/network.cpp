#include "streamlearn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "streamlearn/error.hpp"
#include "streamlearn/io.hpp"
#include "streamlearn/rng.hpp"

namespace streamlearn {

namespace {

constexpr int kRegularAttempts = 64;

bool connected(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  int components = n;
  for (auto [a, b] : edges) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[static_cast<std::size_t>(ra)] = rb;
      --components;
    }
  }
  return components == 1;
}

// One attempt at a simple k-regular graph: repeatedly pair two random free
// stubs, skipping pairs that would form a loop or a repeated edge. Returns
// false when the remaining stubs cannot be paired.
bool pair_stubs(int n, int k, CounterRng& rng, std::vector<std::pair<int, int>>& edges) {
  edges.clear();
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(n * k));
  for (int v = 0; v < n; ++v)
    for (int j = 0; j < k; ++j) stubs.push_back(v);
  std::set<std::pair<int, int>> seen;
  while (!stubs.empty()) {
    bool placed = false;
    for (int tries = 0; tries < 100 && !placed; ++tries) {
      std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
      std::size_t i = pick(rng), j = pick(rng);
      if (i == j) continue;
      int a = stubs[i], b = stubs[j];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (seen.count({a, b})) continue;
      seen.insert({a, b});
      edges.emplace_back(a, b);
      if (i < j) std::swap(i, j);
      stubs.erase(stubs.begin() + static_cast<std::ptrdiff_t>(i));
      stubs.erase(stubs.begin() + static_cast<std::ptrdiff_t>(j));
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> random_regular(int n, int k, std::uint64_t seed) {
  std::vector<std::pair<int, int>> edges;
  for (int attempt = 0; attempt < kRegularAttempts; ++attempt) {
    CounterRng rng(seed, RngDomain::topology, static_cast<std::uint64_t>(attempt));
    if (pair_stubs(n, k, rng, edges) && connected(n, edges)) {
      std::sort(edges.begin(), edges.end());
      return edges;
    }
  }
  throw InvalidArgument("no connected " + std::to_string(k) + "-regular graph on " +
                        std::to_string(n) + " nodes after " + std::to_string(kRegularAttempts) +
                        " attempts");
}

}  // namespace

double second_eigenvalue_magnitude(const Eigen::MatrixXd& weights) {
  const Eigen::Index n = weights.rows();
  if (n < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weights, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition of the weight matrix failed");
  std::vector<double> mags;
  for (Eigen::Index i = 0; i < n; ++i) mags.push_back(std::abs(solver.eigenvalues()[i]));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  // mags[0] is the Perron eigenvalue 1.
  const double l2 = mags[1];
  return l2 < 64 * std::numeric_limits<double>::epsilon() ? 0.0 : l2;
}

NetworkModel make_network(int nodes, std::vector<std::pair<int, int>> edges, WeightRule rule) {
  if (nodes < 1) throw InvalidArgument("network needs at least one node");
  std::set<std::pair<int, int>> unique;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= nodes || b >= nodes) throw InvalidArgument("edge endpoint out of range");
    if (a == b) throw InvalidArgument("self-loops are not allowed");
    unique.insert({std::min(a, b), std::max(a, b)});
  }
  edges.assign(unique.begin(), unique.end());
  if (nodes > 1 && !connected(nodes, edges)) throw InvalidArgument("graph is disconnected");

  std::vector<int> degree(static_cast<std::size_t>(nodes), 0);
  for (auto [a, b] : edges) {
    ++degree[static_cast<std::size_t>(a)];
    ++degree[static_cast<std::size_t>(b)];
  }
  const int max_degree = nodes > 0 ? *std::max_element(degree.begin(), degree.end()) : 0;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nodes, nodes);
  for (auto [a, b] : edges) {
    const int m = rule == WeightRule::metropolis
                      ? std::max(degree[static_cast<std::size_t>(a)], degree[static_cast<std::size_t>(b)])
                      : max_degree;
    const double w = 1.0 / (1.0 + m);
    A(a, b) = w;
    A(b, a) = w;
  }
  for (int i = 0; i < nodes; ++i) {
    double off = 0;
    for (int j = 0; j < nodes; ++j)
      if (j != i) off += A(i, j);
    A(i, i) = 1.0 - off;
  }

  NetworkModel net;
  net.nodes = nodes;
  net.edges = std::move(edges);
  net.weights = std::move(A);
  net.lambda2 = second_eigenvalue_magnitude(net.weights);
  if (!(net.lambda2 < 1.0)) throw InvalidArgument("mixing matrix has |lambda2| = 1");
  return net;
}

NetworkModel build_topology(const TopologySpec& spec) {
  const int n = spec.nodes;
  if (n < 2) throw InvalidArgument("topology needs at least 2 nodes");
  std::vector<std::pair<int, int>> edges;
  switch (spec.kind) {
    case TopologyKind::star:
      for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
      break;
    case TopologyKind::ring:
      for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
      break;
    case TopologyKind::complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    case TopologyKind::k_regular: {
      const int k = spec.degree;
      if (k < 1 || k >= n) throw InvalidArgument("k-regular graph needs 1 <= k < N");
      if ((k * n) % 2 != 0) throw InvalidArgument("k * N must be even for a k-regular graph");
      edges = random_regular(n, k, spec.seed);
      break;
    }
  }
  return make_network(n, std::move(edges), spec.weights);
}

NodeVectors consensus_round(const NetworkModel& net, const NodeVectors& vecs) {
  if (vecs.rows() != net.nodes) throw InvalidArgument("node vector count does not match the network");
  NodeVectors out = net.weights * vecs;
  return out;
}

NodeVectors consensus(const NetworkModel& net, NodeVectors vecs, int rounds) {
  if (rounds < 0) throw InvalidArgument("rounds must be non-negative");
  for (int r = 0; r < rounds; ++r) vecs = consensus_round(net, vecs);
  return vecs;
}

Eigen::RowVectorXd pairwise_mean(const NodeVectors& vecs) {
  const Eigen::Index n = vecs.rows();
  if (n == 0) throw InvalidArgument("cannot average zero vectors");
  // Tree reduction over rows in index order.
  NodeVectors work = vecs;
  Eigen::Index live = n;
  while (live > 1) {
    const Eigen::Index half = live / 2;
    for (Eigen::Index i = 0; i < half; ++i) work.row(i) = work.row(2 * i) + work.row(2 * i + 1);
    if (live % 2 == 1) work.row(half) = work.row(live - 1);
    live = half + live % 2;
  }
  return work.row(0) / static_cast<double>(n);
}

NodeVectors all_reduce(const NodeVectors& vecs) {
  const Eigen::RowVectorXd mean = pairwise_mean(vecs);
  return mean.replicate(vecs.rows(), 1);
}

double max_deviation(const NodeVectors& vecs) {
  const Eigen::RowVectorXd mean = pairwise_mean(vecs);
  double best = 0;
  for (Eigen::Index i = 0; i < vecs.rows(); ++i) best = std::max(best, (vecs.row(i) - mean).norm());
  return best;
}

void write_weights_csv(const NetworkModel& net, const std::filesystem::path& path) {
  std::string body;
  for (int i = 0; i < net.nodes; ++i) {
    for (int j = 0; j < net.nodes; ++j) {
      if (j) body += ',';
      body += format_double(net.weights(i, j));
    }
    body += '\n';
  }
  write_file_atomic(path, body);
}

}  // namespace streamlearn
