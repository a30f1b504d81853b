#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace streamlearn {

/// Per-node vectors, one row per node.
using NodeVectors = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class TopologyKind { star, ring, complete, k_regular };
enum class WeightRule { metropolis, uniform };

struct TopologySpec {
  TopologyKind kind = TopologyKind::complete;
  int nodes = 2;
  int degree = 0;  // k, k-regular only
  std::uint64_t seed = 0;
  WeightRule weights = WeightRule::metropolis;
};

/// Connected undirected graph with a symmetric doubly stochastic mixing matrix.
struct NetworkModel {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;  // 0-based, first < second
  Eigen::MatrixXd weights;
  double lambda2 = 0;  // |second largest eigenvalue| of weights
};

/// Builds the graph and its weights. Metropolis: a_nm = 1/(1 + max(deg n, deg m)).
/// Uniform: every edge gets 1/(1 + max degree), which is 1/N on a complete graph.
/// Random k-regular graphs are redrawn until connected, up to 64 attempts.
NetworkModel build_topology(const TopologySpec& spec);

/// Network over an explicit edge list. Throws if the graph is disconnected.
NetworkModel make_network(int nodes, std::vector<std::pair<int, int>> edges, WeightRule rule);

/// |lambda_2| of a symmetric doubly stochastic matrix.
double second_eigenvalue_magnitude(const Eigen::MatrixXd& weights);

/// One mixing step: v_n <- sum_m a_nm v_m.
NodeVectors consensus_round(const NetworkModel& net, const NodeVectors& vecs);

/// R mixing steps; R = 0 returns the input.
NodeVectors consensus(const NetworkModel& net, NodeVectors vecs, int rounds);

/// Mean of the rows, summed pairwise so the result does not depend on how
/// the caller split the work.
Eigen::RowVectorXd pairwise_mean(const NodeVectors& vecs);

/// Every row replaced by the bit-identical arithmetic mean.
NodeVectors all_reduce(const NodeVectors& vecs);

/// Largest Euclidean distance of a row from the row mean.
double max_deviation(const NodeVectors& vecs);

/// Weight matrix as CSV, 17 significant digits.
void write_weights_csv(const NetworkModel& net, const std::filesystem::path& path);

}  // namespace streamlearn
