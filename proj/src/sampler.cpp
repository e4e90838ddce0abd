#include "ucmf/sampler.hpp"

#include <cmath>
#include <deque>

namespace ucmf {

NegSampler::NegSampler(const Graph& graph) {
  const int n = graph.n_nodes();
  const double total = static_cast<double>(graph.directed_edge_count());
  probs_.resize(n);
  for (int i = 0; i < n; ++i) probs_[i] = graph.degree(i) / total;

  // Walker alias table. Stable small/large queues keep construction
  // deterministic for a given graph.
  accept_.assign(n, 1.0);
  alias_.assign(n, -1);
  std::vector<double> scaled(n);
  std::deque<int> small, large;
  for (int i = 0; i < n; ++i) {
    scaled[i] = probs_[i] * n;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const int s = small.front();
    const int l = large.front();
    small.pop_front();
    large.pop_front();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  for (int i : small) accept_[i] = 1.0;
  for (int i : large) accept_[i] = 1.0;
}

int NegSampler::sample(Rng& rng) const {
  const int idx = static_cast<int>(rng.uniform_index(probs_.size()));
  if (rng.uniform_real() < accept_[idx] || alias_[idx] < 0) return idx;
  return alias_[idx];
}

}  // namespace ucmf
