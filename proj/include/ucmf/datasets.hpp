#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ucmf/graph.hpp"

namespace ucmf {

struct Dataset {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // undirected, one entry per edge
  int feat_dim = 0;
  std::vector<std::vector<std::pair<int, double>>> feature_rows;  // sparse
  std::vector<int> labels;  // kUnlabeled allowed
  int n_classes = 0;
  std::vector<Split> split;

  Graph build_graph() const;
  NodeData build_node_data(const Graph& graph, bool normalize_features = true) const;

  // edges.txt / features.tsv / labels.tsv / split.tsv under dir.
  void write_files(const std::string& dir) const;
};

// --- small fixed graphs used throughout the test suites ---------------------

std::vector<std::pair<int, int>> path_edges(int n);
std::vector<std::pair<int, int>> cycle_edges(int n);
std::vector<std::pair<int, int>> triangle_edges();
std::vector<std::pair<int, int>> star_edges(int leaves);
// Two m-cliques joined by one bridge edge between node m-1 and node m.
std::vector<std::pair<int, int>> two_clique_edges(int m);

// Two m-cliques, one labeled train node per clique, class = clique id. The
// remaining nodes form the test split; with_val moves one node per clique
// into a validation split for early-stopping tests.
Dataset make_two_clique_dataset(int clique_size, bool with_val = false);

// Erdos-Renyi-ish connected random graph (property tests).
std::vector<std::pair<int, int>> random_connected_edges(int n, double extra_edge_prob,
                                                        std::uint64_t seed);

// --- synthetic citation-scale corpus ----------------------------------------

// Degree-heterogeneous planted-partition graph with class-topic bag-of-words
// features and a 20-per-class/500/1000 train/val/test split, standing in for
// a citation benchmark at the same scale when the real files are not on disk.
struct SyntheticCitationConfig {
  int n_nodes = 2708;
  int n_classes = 7;
  int feat_dim = 1433;
  int n_undirected_edges = 5278;
  double intra_class_fraction = 0.93;  // homophily of generated edges
  int topic_words_per_class = 160;
  double topic_word_prob = 0.80;       // feature word drawn from the class topic
  double mean_words_per_node = 18.0;
  int train_per_class = 20;
  int val_size = 500;
  int test_size = 1000;
  std::uint64_t seed = 7;
};

Dataset make_synthetic_citation(const SyntheticCitationConfig& config);

}  // namespace ucmf
