#include "ucmf/graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace ucmf {

Graph Graph::from_edges(int n_nodes, const std::vector<std::pair<int, int>>& edges) {
  if (n_nodes <= 0) throw RangeError("graph must have at least one node");

  std::vector<std::set<int>> adj(n_nodes);
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n_nodes || v < 0 || v >= n_nodes)
      throw RangeError("edge endpoint out of range: " + std::to_string(u) + " " +
                       std::to_string(v));
    if (u == v) throw SelfLoopError("self loop at node " + std::to_string(u));
    adj[u].insert(v);
    adj[v].insert(u);
  }

  Graph g;
  g.n_nodes_ = n_nodes;
  g.offsets_.assign(n_nodes + 1, 0);
  for (int i = 0; i < n_nodes; ++i) {
    if (adj[i].empty())
      throw IsolatedNodeError("node " + std::to_string(i) + " has degree 0");
    g.offsets_[i + 1] = g.offsets_[i] + static_cast<int>(adj[i].size());
  }
  g.neighbors_.reserve(g.offsets_[n_nodes]);
  for (int i = 0; i < n_nodes; ++i)
    g.neighbors_.insert(g.neighbors_.end(), adj[i].begin(), adj[i].end());
  g.directed_edge_count_ = static_cast<std::int64_t>(g.neighbors_.size());
  return g;
}

bool Graph::has_edge(int u, int v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<int, int>> Graph::directed_edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(directed_edge_count_));
  for (int u = 0; u < n_nodes_; ++u)
    for (int v : neighbors(u)) out.emplace_back(u, v);
  return out;
}

std::vector<std::pair<int, int>> Graph::undirected_edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(directed_edge_count_ / 2));
  for (int u = 0; u < n_nodes_; ++u)
    for (int v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

namespace {

bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

Graph load_graph(const std::string& edge_path, int n_nodes) {
  std::ifstream in(edge_path);
  if (!in) throw FormatError("cannot open edge file: " + edge_path);

  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<int, int>> seen;
  long duplicates = 0;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_comment_or_blank(line)) continue;
    std::istringstream ss(line);
    long long u, v;
    if (!(ss >> u >> v))
      throw FormatError(edge_path + ":" + std::to_string(lineno) + ": expected \"u v\"");
    if (u < 0 || u >= n_nodes || v < 0 || v >= n_nodes)
      throw RangeError(edge_path + ":" + std::to_string(lineno) + ": node id out of range");
    if (u == v)
      throw SelfLoopError(edge_path + ":" + std::to_string(lineno) + ": self loop");
    const int ui = static_cast<int>(u), vi = static_cast<int>(v);
    const std::pair<int, int> key{std::min(ui, vi), std::max(ui, vi)};
    if (!seen.insert(key).second) {
      ++duplicates;
      continue;
    }
    edges.emplace_back(ui, vi);
  }
  if (duplicates > 0)
    std::cerr << "[warn] " << edge_path << ": dropped " << duplicates
              << " duplicate edge(s)\n";
  return Graph::from_edges(n_nodes, edges);
}

std::span<const int> NodeData::split_nodes(Split s) const {
  switch (s) {
    case Split::Train: return train_nodes;
    case Split::Val: return val_nodes;
    case Split::Test: return test_nodes;
    default: return {};
  }
}

void NodeData::rebuild_split_lists() {
  train_nodes.clear();
  val_nodes.clear();
  test_nodes.clear();
  for (int i = 0; i < n_nodes; ++i) {
    switch (split[i]) {
      case Split::Train: train_nodes.push_back(i); break;
      case Split::Val: val_nodes.push_back(i); break;
      case Split::Test: test_nodes.push_back(i); break;
      default: break;
    }
  }
}

void NodeData::validate(const Graph& graph) const {
  if (n_nodes != graph.n_nodes())
    throw ShapeError("node data row count does not match graph");
  if (static_cast<int>(labels.size()) != n_nodes ||
      static_cast<int>(split.size()) != n_nodes)
    throw ShapeError("labels/split length mismatch");
  if (feat_dim > 0 && features.rows() != n_nodes)
    throw ShapeError("feature row count does not match graph");
  for (int i = 0; i < n_nodes; ++i) {
    if (split[i] == Split::Train && labels[i] == kUnlabeled)
      throw MissingLabelError("train node " + std::to_string(i) + " has no label");
    if (labels[i] != kUnlabeled && (labels[i] < 0 || labels[i] >= n_classes))
      throw RangeError("label id out of range at node " + std::to_string(i));
  }
}

namespace {

Split parse_split_tag(const std::string& tag, const std::string& context) {
  if (tag == "train") return Split::Train;
  if (tag == "val") return Split::Val;
  if (tag == "test") return Split::Test;
  throw FormatError(context + ": unknown split tag \"" + tag + "\"");
}

}  // namespace

NodeData load_node_data(const std::string& feature_path, const std::string& label_path,
                        const std::string& split_path, const Graph& graph,
                        bool normalize_features) {
  NodeData data;
  data.n_nodes = graph.n_nodes();
  data.labels.assign(data.n_nodes, kUnlabeled);
  data.split.assign(data.n_nodes, Split::None);

  if (!feature_path.empty()) {
    std::ifstream in(feature_path);
    if (!in) throw FormatError("cannot open feature file: " + feature_path);
    std::vector<Eigen::Triplet<double>> triplets;
    std::string line;
    int row = 0;
    int feat_dim = -1;
    while (std::getline(in, line)) {
      if (is_comment_or_blank(line)) continue;
      std::istringstream ss(line);
      double value;
      int col = 0;
      double row_sum = 0.0;
      std::vector<std::pair<int, double>> row_values;
      while (ss >> value) {
        if (value != 0.0) {
          row_values.emplace_back(col, value);
          row_sum += std::abs(value);
        }
        ++col;
      }
      if (feat_dim < 0)
        feat_dim = col;
      else if (col != feat_dim)
        throw ShapeError(feature_path + ": inconsistent feature dimension at row " +
                         std::to_string(row));
      const double scale = (normalize_features && row_sum > 0.0) ? 1.0 / row_sum : 1.0;
      for (const auto& [c, val] : row_values)
        triplets.emplace_back(row, c, val * scale);
      ++row;
    }
    if (row != data.n_nodes)
      throw ShapeError(feature_path + ": " + std::to_string(row) + " rows for " +
                       std::to_string(data.n_nodes) + " nodes");
    data.feat_dim = std::max(feat_dim, 0);
    data.features.resize(data.n_nodes, data.feat_dim);
    data.features.setFromTriplets(triplets.begin(), triplets.end());
  }

  if (!label_path.empty()) {
    std::ifstream in(label_path);
    if (!in) throw FormatError("cannot open label file: " + label_path);
    std::string line;
    long lineno = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
      ++lineno;
      if (is_comment_or_blank(line)) continue;
      std::istringstream ss(line);
      long long node, label;
      if (!(ss >> node >> label))
        throw FormatError(label_path + ":" + std::to_string(lineno) +
                          ": expected \"node_id class_id\"");
      if (node < 0 || node >= data.n_nodes)
        throw RangeError(label_path + ":" + std::to_string(lineno) + ": node id out of range");
      if (label < 0)
        throw RangeError(label_path + ":" + std::to_string(lineno) + ": negative class id");
      data.labels[node] = static_cast<int>(label);
      max_label = std::max(max_label, static_cast<int>(label));
    }
    data.n_classes = max_label + 1;
  }

  if (!split_path.empty()) {
    std::ifstream in(split_path);
    if (!in) throw FormatError("cannot open split file: " + split_path);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (is_comment_or_blank(line)) continue;
      std::istringstream ss(line);
      long long node;
      std::string tag;
      if (!(ss >> node >> tag))
        throw FormatError(split_path + ":" + std::to_string(lineno) +
                          ": expected \"node_id tag\"");
      if (node < 0 || node >= data.n_nodes)
        throw RangeError(split_path + ":" + std::to_string(lineno) + ": node id out of range");
      data.split[node] =
          parse_split_tag(tag, split_path + ":" + std::to_string(lineno));
    }
  }

  data.rebuild_split_lists();
  data.validate(graph);
  return data;
}

}  // namespace ucmf
