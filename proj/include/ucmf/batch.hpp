#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ucmf/rng.hpp"
#include "ucmf/sampler.hpp"

namespace ucmf {

// One structure-loss mini-batch: directed edge samples with k degree-sampled
// negatives per edge (negatives are never filtered against true neighbors).
struct EdgeBatch {
  std::vector<std::pair<int, int>> edges;
  int k = 0;
  std::vector<int> negatives;  // k entries per edge, flattened

  std::span<const int> negatives_of(std::size_t edge_index) const {
    return {negatives.data() + edge_index * static_cast<std::size_t>(k),
            static_cast<std::size_t>(k)};
  }
};

// Draws edges i.i.d. uniform from `edge_pool`, then k negatives per edge.
// The draw order (edge, then its negatives) is part of the reproducibility
// contract shared by the centralized and distributed trainers.
EdgeBatch draw_edge_batch(std::span<const std::pair<int, int>> edge_pool, int batch_size,
                          int k, const NegSampler& sampler, Rng& rng);

// Labeled node ids drawn i.i.d. uniform from `label_pool`.
std::vector<int> draw_label_batch(std::span<const int> label_pool, int batch_size, Rng& rng);

}  // namespace ucmf
