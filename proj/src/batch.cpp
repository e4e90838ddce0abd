#include "ucmf/batch.hpp"

#include "ucmf/error.hpp"

namespace ucmf {

EdgeBatch draw_edge_batch(std::span<const std::pair<int, int>> edge_pool, int batch_size,
                          int k, const NegSampler& sampler, Rng& rng) {
  if (edge_pool.empty()) throw Error("cannot draw an edge batch from an empty pool");
  EdgeBatch batch;
  batch.k = k;
  batch.edges.reserve(batch_size);
  batch.negatives.reserve(static_cast<std::size_t>(batch_size) * k);
  for (int b = 0; b < batch_size; ++b) {
    batch.edges.push_back(edge_pool[rng.uniform_index(edge_pool.size())]);
    for (int t = 0; t < k; ++t) batch.negatives.push_back(sampler.sample(rng));
  }
  return batch;
}

std::vector<int> draw_label_batch(std::span<const int> label_pool, int batch_size, Rng& rng) {
  if (label_pool.empty()) throw Error("cannot draw a label batch from an empty pool");
  std::vector<int> batch;
  batch.reserve(batch_size);
  for (int b = 0; b < batch_size; ++b)
    batch.push_back(label_pool[rng.uniform_index(label_pool.size())]);
  return batch;
}

}  // namespace ucmf
