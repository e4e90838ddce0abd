#include "ucmf/losses.hpp"

#include <cmath>
#include <unordered_map>

namespace ucmf {

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double positive_term(double dot) { return softplus(-dot); }

double negative_term(double dot) { return softplus(dot); }

namespace {

// Per-batch scratch: each touched node is encoded once; v-space gradients
// accumulate per node and are pulled back through the encoder at the end.
// First-appearance ordering keeps the float summation order reproducible.
struct NodeWorkspace {
  std::unordered_map<int, int> index;
  std::vector<int> nodes;
  std::vector<EncodeCache> caches;
  std::vector<Eigen::VectorXd> grad_v;

  int touch(const ModelParams& params, const EncoderMode& mode, const NodeData& data,
            int node, LossStats& stats) {
    auto it = index.find(node);
    if (it != index.end()) return it->second;
    const int slot = static_cast<int>(nodes.size());
    index.emplace(node, slot);
    nodes.push_back(node);
    caches.push_back(encode_node(params, mode, data, node));
    if (mode.unitize) stats.observe_norm(caches.back().v.norm());
    grad_v.push_back(Eigen::VectorXd::Zero(caches.back().v.size()));
    return slot;
  }
};

}  // namespace

void structure_batch_accumulate(const ModelParams& params, const EncoderMode& mode,
                                const NodeData& data, const EdgeBatch& batch,
                                BatchAccumulator& acc) {
  NodeWorkspace ws;
  for (std::size_t e = 0; e < batch.edges.size(); ++e) {
    const auto [i, j] = batch.edges[e];
    const int si = ws.touch(params, mode, data, i, acc.stats);
    const int sj = ws.touch(params, mode, data, j, acc.stats);

    const double pos_dot = ws.caches[si].v.dot(ws.caches[sj].v);
    acc.stats.observe_dot(pos_dot);
    if (mode.unitize && std::abs(pos_dot) > 1.0 + 1e-6)
      throw Error("unit-representation dot product out of [-1, 1]");
    acc.loss_sum += positive_term(pos_dot);
    // d/d(dot) of -log sigmoid(dot) is -sigmoid(-dot).
    const double pos_coef = -sigmoid(-pos_dot);
    ws.grad_v[si] += pos_coef * ws.caches[sj].v;
    ws.grad_v[sj] += pos_coef * ws.caches[si].v;

    for (int neg : batch.negatives_of(e)) {
      const int sn = ws.touch(params, mode, data, neg, acc.stats);
      const double neg_dot = ws.caches[si].v.dot(ws.caches[sn].v);
      acc.stats.observe_dot(neg_dot);
      if (mode.unitize && std::abs(neg_dot) > 1.0 + 1e-6)
        throw Error("unit-representation dot product out of [-1, 1]");
      acc.loss_sum += negative_term(neg_dot);
      const double neg_coef = sigmoid(neg_dot);
      ws.grad_v[si] += neg_coef * ws.caches[sn].v;
      ws.grad_v[sn] += neg_coef * ws.caches[si].v;
    }
  }
  for (std::size_t s = 0; s < ws.nodes.size(); ++s)
    encode_backward(params, mode, data, ws.nodes[s], ws.caches[s], ws.grad_v[s], acc.grads);
  acc.terms += static_cast<long>(batch.edges.size());
}

std::pair<double, Gradients> structure_batch_loss(const ModelParams& params,
                                                  const EncoderMode& mode,
                                                  const NodeData& data,
                                                  const EdgeBatch& batch) {
  BatchAccumulator acc(params);
  structure_batch_accumulate(params, mode, data, batch, acc);
  const double inv = acc.terms > 0 ? 1.0 / static_cast<double>(acc.terms) : 0.0;
  acc.grads.for_each([&](const char*, auto& t) { t *= inv; });
  return {acc.loss_sum * inv, std::move(acc.grads)};
}

void classification_batch_accumulate(const ModelParams& params, const EncoderMode& mode,
                                     const NodeData& data, std::span<const int> nodes,
                                     double dropout_rate, Rng* dropout_rng,
                                     BatchAccumulator& acc,
                                     const std::vector<Eigen::VectorXd>* fixed_scales) {
  const int hidden = static_cast<int>(params.t.hidden_bias.size());
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const int node = nodes[b];
    const int label = data.labels[node];
    if (label == kUnlabeled)
      throw MissingLabelError("node " + std::to_string(node) + " in a label batch");

    EncodeCache enc = encode_node(params, mode, data, node);
    if (mode.unitize) acc.stats.observe_norm(enc.v.norm());

    Eigen::VectorXd scale;
    if (fixed_scales != nullptr)
      scale = (*fixed_scales)[b];
    else if (dropout_rng != nullptr)
      scale = draw_dropout_scale(hidden, dropout_rate, *dropout_rng);
    else
      scale = Eigen::VectorXd::Ones(hidden);

    ClassifyCache cls = classify_forward(params, enc.v, scale);
    // A zero probability at the true label yields +inf here; the trainer's
    // divergence guard is responsible for catching it.
    acc.loss_sum += -std::log(cls.probs(label));

    // Softmax cross-entropy: d loss / d logits = probs - onehot(label).
    Eigen::VectorXd grad_logits = cls.probs;
    grad_logits(label) -= 1.0;
    const Eigen::VectorXd grad_v = classify_backward(params, cls, grad_logits, acc.grads);
    encode_backward(params, mode, data, node, enc, grad_v, acc.grads);
  }
  acc.terms += static_cast<long>(nodes.size());
}

std::pair<double, Gradients> classification_batch_loss(const ModelParams& params,
                                                       const EncoderMode& mode,
                                                       const NodeData& data,
                                                       std::span<const int> nodes,
                                                       double dropout_rate, Rng* dropout_rng) {
  BatchAccumulator acc(params);
  classification_batch_accumulate(params, mode, data, nodes, dropout_rate, dropout_rng, acc);
  const double inv = acc.terms > 0 ? 1.0 / static_cast<double>(acc.terms) : 0.0;
  acc.grads.for_each([&](const char*, auto& t) { t *= inv; });
  return {acc.loss_sum * inv, std::move(acc.grads)};
}

}  // namespace ucmf
