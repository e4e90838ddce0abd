#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "ucmf/graph.hpp"
#include "ucmf/rng.hpp"

namespace ucmf {

// Fraction of split nodes whose prediction matches the label. `predictions`
// is indexed by node id. Throws EmptySplitError when the split has no nodes.
double accuracy(const std::vector<int>& predictions, const NodeData& data, Split split);

struct CommunityAssignment {
  std::vector<int> cluster;  // per node, in [0, n_clusters)
  int n_clusters = 0;
};

// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded from
// the point farthest from its assigned centroid. Deterministic given the seed.
CommunityAssignment kmeans(const Eigen::MatrixXd& embeddings, int n_clusters,
                           std::uint64_t seed, int max_iter = 100);

constexpr double kConductanceInf = std::numeric_limits<double>::infinity();

struct ConductanceReport {
  std::vector<double> per_community;  // kConductanceInf where within == 0
  std::vector<long> leaving;          // undirected edges with one endpoint inside
  std::vector<long> within;           // undirected edges with both endpoints inside
  double mean = 0.0;                  // over finite communities only
};

// Ratio of edges leaving each community to edges within it (both counted
// undirected). Communities with no internal edge report an infinite ratio and
// are excluded from the mean with a warning.
ConductanceReport conductance(const CommunityAssignment& assignment, const Graph& graph);

// Textbook normalized-cut variant, kept for cross-checking:
// cut / min(vol(c), vol(complement)).
std::vector<double> conductance_volume_normalized(const CommunityAssignment& assignment,
                                                  const Graph& graph);

}  // namespace ucmf
