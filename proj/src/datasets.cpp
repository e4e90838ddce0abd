#include "ucmf/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "ucmf/rng.hpp"

namespace ucmf {

Graph Dataset::build_graph() const { return Graph::from_edges(n_nodes, edges); }

NodeData Dataset::build_node_data(const Graph& graph, bool normalize_features) const {
  NodeData data;
  data.n_nodes = n_nodes;
  data.feat_dim = feat_dim;
  if (feat_dim > 0) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (int i = 0; i < n_nodes; ++i) {
      double row_sum = 0.0;
      for (const auto& [c, v] : feature_rows[i]) row_sum += std::abs(v);
      const double scale = (normalize_features && row_sum > 0.0) ? 1.0 / row_sum : 1.0;
      for (const auto& [c, v] : feature_rows[i]) triplets.emplace_back(i, c, v * scale);
    }
    data.features.resize(n_nodes, feat_dim);
    data.features.setFromTriplets(triplets.begin(), triplets.end());
  }
  data.labels = labels.empty() ? std::vector<int>(n_nodes, kUnlabeled) : labels;
  data.n_classes = n_classes;
  data.split = split.empty() ? std::vector<Split>(n_nodes, Split::None) : split;
  data.rebuild_split_lists();
  data.validate(graph);
  return data;
}

void Dataset::write_files(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "edges.txt");
    out << "# " << n_nodes << " nodes, " << edges.size() << " undirected edges\n";
    for (const auto& [u, v] : edges) out << u << ' ' << v << '\n';
  }
  if (feat_dim > 0) {
    std::ofstream out(fs::path(dir) / "features.tsv");
    for (int i = 0; i < n_nodes; ++i) {
      std::vector<double> row(feat_dim, 0.0);
      for (const auto& [c, v] : feature_rows[i]) row[c] = v;
      for (int c = 0; c < feat_dim; ++c) out << (c ? "\t" : "") << row[c];
      out << '\n';
    }
  }
  if (!labels.empty()) {
    std::ofstream out(fs::path(dir) / "labels.tsv");
    for (int i = 0; i < n_nodes; ++i)
      if (labels[i] != kUnlabeled) out << i << '\t' << labels[i] << '\n';
  }
  if (!split.empty()) {
    std::ofstream out(fs::path(dir) / "split.tsv");
    for (int i = 0; i < n_nodes; ++i) {
      switch (split[i]) {
        case Split::Train: out << i << "\ttrain\n"; break;
        case Split::Val: out << i << "\tval\n"; break;
        case Split::Test: out << i << "\ttest\n"; break;
        default: break;
      }
    }
  }
}

std::vector<std::pair<int, int>> path_edges(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return e;
}

std::vector<std::pair<int, int>> cycle_edges(int n) {
  auto e = path_edges(n);
  e.emplace_back(n - 1, 0);
  return e;
}

std::vector<std::pair<int, int>> triangle_edges() { return cycle_edges(3); }

std::vector<std::pair<int, int>> star_edges(int leaves) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return e;
}

std::vector<std::pair<int, int>> two_clique_edges(int m) {
  std::vector<std::pair<int, int>> e;
  for (int base : {0, m})
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) e.emplace_back(base + i, base + j);
  e.emplace_back(m - 1, m);
  return e;
}

Dataset make_two_clique_dataset(int clique_size, bool with_val) {
  const int m = clique_size;
  Dataset d;
  d.n_nodes = 2 * m;
  d.edges = two_clique_edges(m);
  d.n_classes = 2;
  d.labels.resize(d.n_nodes);
  d.split.assign(d.n_nodes, Split::Test);
  for (int i = 0; i < d.n_nodes; ++i) d.labels[i] = i < m ? 0 : 1;
  d.split[0] = Split::Train;
  d.split[m] = Split::Train;
  if (with_val && m > 2) {
    d.split[1] = Split::Val;
    d.split[m + 1] = Split::Val;
  }
  return d;
}

std::vector<std::pair<int, int>> random_connected_edges(int n, double extra_edge_prob,
                                                        std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  // Random spanning tree first, extras on top.
  for (int i = 1; i < n; ++i)
    edges.emplace_back(static_cast<int>(rng.uniform_index(i)), i);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform_real() < extra_edge_prob) edges.emplace_back(i, j);
  std::set<std::pair<int, int>> dedup;
  std::vector<std::pair<int, int>> out;
  for (auto [u, v] : edges) {
    const std::pair<int, int> key{std::min(u, v), std::max(u, v)};
    if (dedup.insert(key).second) out.push_back(key);
  }
  return out;
}

Dataset make_synthetic_citation(const SyntheticCitationConfig& cfg) {
  Rng rng(cfg.seed);
  Dataset d;
  d.n_nodes = cfg.n_nodes;
  d.n_classes = cfg.n_classes;
  d.feat_dim = cfg.feat_dim;

  // Uneven class sizes, citation-style.
  std::vector<int> class_of(cfg.n_nodes);
  std::vector<std::vector<int>> members(cfg.n_classes);
  {
    std::vector<double> weights(cfg.n_classes);
    for (int c = 0; c < cfg.n_classes; ++c) weights[c] = 1.0 + 0.35 * c;
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    int assigned = 0;
    for (int c = 0; c < cfg.n_classes; ++c) {
      int quota = static_cast<int>(std::floor(cfg.n_nodes * weights[c] / wsum));
      if (c == cfg.n_classes - 1) quota = cfg.n_nodes - assigned;
      for (int i = 0; i < quota; ++i) {
        class_of[assigned] = c;
        ++assigned;
      }
    }
    // Shuffle node->class so ids carry no information.
    for (int i = cfg.n_nodes - 1; i > 0; --i)
      std::swap(class_of[i], class_of[rng.uniform_index(i + 1)]);
    for (int i = 0; i < cfg.n_nodes; ++i) members[class_of[i]].push_back(i);
  }

  // Power-law-ish degree propensity.
  std::vector<double> propensity(cfg.n_nodes);
  for (int i = 0; i < cfg.n_nodes; ++i)
    propensity[i] = std::pow(rng.uniform_real() + 1e-3, -0.45);
  std::vector<std::vector<double>> class_cum(cfg.n_classes);
  std::vector<double> class_total(cfg.n_classes, 0.0);
  for (int c = 0; c < cfg.n_classes; ++c) {
    class_cum[c].reserve(members[c].size());
    for (int node : members[c]) {
      class_total[c] += propensity[node];
      class_cum[c].push_back(class_total[c]);
    }
  }
  std::vector<double> all_cum(cfg.n_nodes);
  double all_total = 0.0;
  for (int i = 0; i < cfg.n_nodes; ++i) {
    all_total += propensity[i];
    all_cum[i] = all_total;
  }
  auto draw_from = [&](const std::vector<double>& cum, double total) {
    const double r = rng.uniform_real() * total;
    return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
  };
  auto draw_node_global = [&] { return draw_from(all_cum, all_total); };
  auto draw_node_in_class = [&](int c) { return members[c][draw_from(class_cum[c], class_total[c])]; };

  std::set<std::pair<int, int>> edge_set;
  long attempts = 0;
  while (static_cast<int>(edge_set.size()) < cfg.n_undirected_edges &&
         attempts < 50LL * cfg.n_undirected_edges) {
    ++attempts;
    const int u = draw_node_global();
    const int v = rng.uniform_real() < cfg.intra_class_fraction
                      ? draw_node_in_class(class_of[u])
                      : draw_node_global();
    if (u == v) continue;
    edge_set.insert(std::minmax(u, v));
  }
  // Attach any leftover isolated node to a same-class peer.
  {
    std::vector<int> degree(cfg.n_nodes, 0);
    for (const auto& [u, v] : edge_set) {
      ++degree[u];
      ++degree[v];
    }
    for (int i = 0; i < cfg.n_nodes; ++i) {
      while (degree[i] == 0) {
        const int peer = draw_node_in_class(class_of[i]);
        if (peer == i) continue;
        if (edge_set.insert(std::minmax(i, peer)).second) {
          ++degree[i];
          ++degree[peer];
        }
      }
    }
  }
  d.edges.assign(edge_set.begin(), edge_set.end());

  // Class topics: word subsets with light overlap, plus global noise words.
  std::vector<std::vector<int>> topic(cfg.n_classes);
  for (int c = 0; c < cfg.n_classes; ++c) {
    std::set<int> words;
    while (static_cast<int>(words.size()) < cfg.topic_words_per_class)
      words.insert(static_cast<int>(rng.uniform_index(cfg.feat_dim)));
    topic[c].assign(words.begin(), words.end());
  }
  d.feature_rows.resize(cfg.n_nodes);
  for (int i = 0; i < cfg.n_nodes; ++i) {
    const int c = class_of[i];
    // Poisson via inversion, clamped to at least 2 words.
    int count = 0;
    double p = std::exp(-cfg.mean_words_per_node);
    double cumulative = p;
    const double r = rng.uniform_real();
    while (cumulative < r && count < 10 * cfg.mean_words_per_node) {
      ++count;
      p *= cfg.mean_words_per_node / count;
      cumulative += p;
    }
    count = std::max(count, 2);
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < count) {
      if (rng.uniform_real() < cfg.topic_word_prob)
        chosen.insert(topic[c][rng.uniform_index(topic[c].size())]);
      else
        chosen.insert(static_cast<int>(rng.uniform_index(cfg.feat_dim)));
    }
    for (int w : chosen) d.feature_rows[i].emplace_back(w, 1.0);
  }

  d.labels = class_of;
  d.split.assign(cfg.n_nodes, Split::None);
  // 20 labeled nodes per class, then val/test from the remainder, in a
  // shuffled order.
  std::vector<int> order(cfg.n_nodes);
  std::iota(order.begin(), order.end(), 0);
  for (int i = cfg.n_nodes - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_index(i + 1)]);
  std::vector<int> train_count(cfg.n_classes, 0);
  for (int node : order) {
    if (train_count[class_of[node]] < cfg.train_per_class) {
      d.split[node] = Split::Train;
      ++train_count[class_of[node]];
    }
  }
  int val_left = cfg.val_size, test_left = cfg.test_size;
  for (int node : order) {
    if (d.split[node] != Split::None) continue;
    if (val_left > 0) {
      d.split[node] = Split::Val;
      --val_left;
    } else if (test_left > 0) {
      d.split[node] = Split::Test;
      --test_left;
    }
  }
  return d;
}

}  // namespace ucmf
