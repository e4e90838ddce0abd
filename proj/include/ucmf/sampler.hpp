#pragma once

#include <vector>

#include "ucmf/graph.hpp"
#include "ucmf/rng.hpp"

namespace ucmf {

// Degree-proportional node sampler: node i is drawn with probability
// d_i / sum_j d_j. Built once per graph, immutable afterwards; alias table
// gives O(1) draws.
class NegSampler {
 public:
  explicit NegSampler(const Graph& graph);

  int sample(Rng& rng) const;

  double probability(int node) const { return probs_[node]; }
  int n_nodes() const { return static_cast<int>(probs_.size()); }

 private:
  std::vector<double> probs_;        // exact d_i / |G|
  std::vector<double> accept_;       // alias acceptance thresholds
  std::vector<int> alias_;
};

inline NegSampler build_neg_sampler(const Graph& graph) { return NegSampler(graph); }

inline int sample_negative(const NegSampler& sampler, Rng& rng) { return sampler.sample(rng); }

}  // namespace ucmf
