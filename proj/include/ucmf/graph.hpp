#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ucmf/error.hpp"

namespace ucmf {

// Immutable undirected simple graph in CSR form. Neighbor lists are sorted,
// deduplicated and symmetric; every node has degree >= 1.
class Graph {
 public:
  Graph() = default;

  // Validates and symmetrizes; throws SelfLoopError / RangeError /
  // IsolatedNodeError. Duplicate input edges are collapsed silently
  // (loaders report them).
  static Graph from_edges(int n_nodes, const std::vector<std::pair<int, int>>& edges);

  int n_nodes() const { return n_nodes_; }
  int degree(int node) const { return offsets_[node + 1] - offsets_[node]; }

  std::span<const int> neighbors(int node) const {
    return {neighbors_.data() + offsets_[node],
            static_cast<std::size_t>(degree(node))};
  }

  bool has_edge(int u, int v) const;

  // Sum of degrees: every undirected edge counted in both directions.
  std::int64_t directed_edge_count() const { return directed_edge_count_; }
  std::int64_t undirected_edge_count() const { return directed_edge_count_ / 2; }

  // All directed edges (u, v) in canonical order: u ascending, then v.
  std::vector<std::pair<int, int>> directed_edges() const;
  // Each undirected edge once, with u < v.
  std::vector<std::pair<int, int>> undirected_edges() const;

 private:
  int n_nodes_ = 0;
  std::vector<int> offsets_;
  std::vector<int> neighbors_;
  std::int64_t directed_edge_count_ = 0;
};

enum class Split : std::uint8_t { None = 0, Train = 1, Val = 2, Test = 3 };

constexpr int kUnlabeled = -1;

// Node features, labels and split tags for one graph.
struct NodeData {
  int n_nodes = 0;
  int feat_dim = 0;
  // Row i holds node i's features; kept sparse since bag-of-words inputs
  // dominate this problem class.
  Eigen::SparseMatrix<double, Eigen::RowMajor> features;
  std::vector<int> labels;  // kUnlabeled where absent
  int n_classes = 0;
  std::vector<Split> split;

  // Node ids per split tag, ascending.
  std::vector<int> train_nodes, val_nodes, test_nodes;

  std::span<const int> split_nodes(Split s) const;
  void rebuild_split_lists();
  void validate(const Graph& graph) const;
};

// Reads "u v" pairs (whitespace separated, '#' comments allowed).
// Duplicate edges are collapsed with a warning on stderr.
Graph load_graph(const std::string& edge_path, int n_nodes);

// feature_path: TSV, row i = node i's feature values (may be empty for a
//   featureless run).
// label_path: TSV "node_id class_id"; omitted nodes stay unlabeled.
// split_path: TSV "node_id {train|val|test}"; may be empty.
// normalize_features: L1 row normalization of the feature matrix.
NodeData load_node_data(const std::string& feature_path, const std::string& label_path,
                        const std::string& split_path, const Graph& graph,
                        bool normalize_features = true);

}  // namespace ucmf
