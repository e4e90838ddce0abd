#include "ucmf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "ucmf/error.hpp"

namespace ucmf {

double accuracy(const std::vector<int>& predictions, const NodeData& data, Split split) {
  const auto nodes = data.split_nodes(split);
  if (nodes.empty()) throw EmptySplitError("no nodes in requested split");
  long correct = 0;
  for (int node : nodes) {
    if (data.labels[node] == kUnlabeled)
      throw MissingLabelError("split node " + std::to_string(node) + " has no label");
    if (predictions[node] == data.labels[node]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

namespace {

double sq_dist(const Eigen::MatrixXd& x, int row, const Eigen::RowVectorXd& c) {
  return (x.row(row) - c).squaredNorm();
}

double wcss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids,
            const std::vector<int>& assign) {
  double total = 0.0;
  for (int i = 0; i < x.rows(); ++i) total += sq_dist(x, i, centroids.row(assign[i]));
  return total;
}

}  // namespace

CommunityAssignment kmeans(const Eigen::MatrixXd& embeddings, int n_clusters,
                           std::uint64_t seed, int max_iter) {
  const int n = static_cast<int>(embeddings.rows());
  const int dim = static_cast<int>(embeddings.cols());
  if (n_clusters < 1 || n_clusters > n) throw Error("invalid cluster count");
  if (!embeddings.allFinite()) throw Error("kmeans input must be finite");
  Rng rng(seed);

  // k-means++ seeding.
  Eigen::MatrixXd centroids(n_clusters, dim);
  std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
  centroids.row(0) = embeddings.row(rng.uniform_index(n));
  for (int c = 1; c < n_clusters; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      best_d2[i] = std::min(best_d2[i], sq_dist(embeddings, i, centroids.row(c - 1)));
      total += best_d2[i];
    }
    int pick = 0;
    if (total > 0.0) {
      double r = rng.uniform_real() * total;
      for (int i = 0; i < n; ++i) {
        r -= best_d2[i];
        if (r <= 0.0) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = static_cast<int>(rng.uniform_index(n));
    }
    centroids.row(c) = embeddings.row(pick);
  }

  std::vector<int> assign(n, 0);
  double prev_objective = std::numeric_limits<double>::infinity();
  bool reseeded_last_iter = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = sq_dist(embeddings, i, centroids.row(0));
      for (int c = 1; c < n_clusters; ++c) {
        const double d = sq_dist(embeddings, i, centroids.row(c));
        if (d < best_dist) {
          best_dist = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }

    const double objective = wcss(embeddings, centroids, assign);
    // Lloyd steps never increase the objective; a reseed may.
    if (!reseeded_last_iter && objective > prev_objective + 1e-9)
      throw Error("kmeans objective increased");
    prev_objective = objective;

    std::vector<long> counts(n_clusters, 0);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_clusters, dim);
    for (int i = 0; i < n; ++i) {
      ++counts[assign[i]];
      sums.row(assign[i]) += embeddings.row(i);
    }
    reseeded_last_iter = false;
    for (int c = 0; c < n_clusters; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // Re-seed from the point farthest from its current centroid.
        int farthest = 0;
        double far_dist = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = sq_dist(embeddings, i, centroids.row(assign[i]));
          if (d > far_dist) {
            far_dist = d;
            farthest = i;
          }
        }
        centroids.row(c) = embeddings.row(farthest);
        reseeded_last_iter = true;
      }
    }
    if (!changed && !reseeded_last_iter && iter > 0) break;
  }

  CommunityAssignment result;
  result.cluster = std::move(assign);
  result.n_clusters = n_clusters;
  return result;
}

ConductanceReport conductance(const CommunityAssignment& assignment, const Graph& graph) {
  const int k = assignment.n_clusters;
  if (static_cast<int>(assignment.cluster.size()) != graph.n_nodes())
    throw ShapeError("assignment length does not match graph");
  ConductanceReport report;
  report.leaving.assign(k, 0);
  report.within.assign(k, 0);
  for (const auto& [u, v] : graph.undirected_edges()) {
    const int cu = assignment.cluster[u];
    const int cv = assignment.cluster[v];
    if (cu == cv) {
      ++report.within[cu];
    } else {
      ++report.leaving[cu];
      ++report.leaving[cv];
    }
  }
  report.per_community.resize(k);
  double sum = 0.0;
  int finite = 0;
  for (int c = 0; c < k; ++c) {
    if (report.within[c] == 0) {
      report.per_community[c] = kConductanceInf;
      std::cerr << "[warn] community " << c
                << " has no internal edges; excluded from mean conductance\n";
      continue;
    }
    report.per_community[c] =
        static_cast<double>(report.leaving[c]) / static_cast<double>(report.within[c]);
    sum += report.per_community[c];
    ++finite;
  }
  report.mean = finite > 0 ? sum / finite : kConductanceInf;
  return report;
}

std::vector<double> conductance_volume_normalized(const CommunityAssignment& assignment,
                                                  const Graph& graph) {
  const int k = assignment.n_clusters;
  std::vector<double> cut(k, 0.0), vol(k, 0.0);
  const double total_vol = static_cast<double>(graph.directed_edge_count());
  for (const auto& [u, v] : graph.undirected_edges()) {
    const int cu = assignment.cluster[u];
    const int cv = assignment.cluster[v];
    if (cu != cv) {
      cut[cu] += 1.0;
      cut[cv] += 1.0;
    }
  }
  for (int i = 0; i < graph.n_nodes(); ++i)
    vol[assignment.cluster[i]] += graph.degree(i);
  std::vector<double> result(k);
  for (int c = 0; c < k; ++c) {
    const double denom = std::min(vol[c], total_vol - vol[c]);
    result[c] = denom > 0.0 ? cut[c] / denom : kConductanceInf;
  }
  return result;
}

}  // namespace ucmf
