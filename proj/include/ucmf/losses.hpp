#pragma once

#include <limits>
#include <vector>

#include "ucmf/batch.hpp"
#include "ucmf/nn.hpp"

namespace ucmf {

// Invariant probes recorded while a loss walks a batch.
struct LossStats {
  double max_unit_norm_dev = 0.0;  // max | ||v|| - 1 | over consumed reps
  double min_dot = std::numeric_limits<double>::infinity();
  double max_dot = -std::numeric_limits<double>::infinity();

  void observe_norm(double norm) {
    const double dev = norm > 1.0 ? norm - 1.0 : 1.0 - norm;
    if (dev > max_unit_norm_dev) max_unit_norm_dev = dev;
  }
  void observe_dot(double dot) {
    if (dot < min_dot) min_dot = dot;
    if (dot > max_dot) max_dot = dot;
  }
  void merge(const LossStats& other) {
    if (other.max_unit_norm_dev > max_unit_norm_dev)
      max_unit_norm_dev = other.max_unit_norm_dev;
    if (other.min_dot < min_dot) min_dot = other.min_dot;
    if (other.max_dot > max_dot) max_dot = other.max_dot;
  }
};

// Gradient sums over a batch; callers divide by `terms` for the mean. Keeping
// sums (not means) lets parameter-server workers push partial batches that
// aggregate exactly to the centralized gradient.
struct BatchAccumulator {
  double loss_sum = 0.0;
  long terms = 0;
  Gradients grads;
  LossStats stats;

  explicit BatchAccumulator(const ModelParams& params) : grads(make_gradients(params)) {}
};

double sigmoid(double x);
double softplus(double x);  // log(1 + e^x), overflow-safe

// -log sigmoid(dot): attractive term for an observed edge.
double positive_term(double dot);
// -log sigmoid(-dot): repulsive term for a sampled negative.
double negative_term(double dot);

// Sum of per-edge structure losses and their parameter gradients over the
// batch. Gradients flow through the unitization into the encoder or the free
// embedding table.
void structure_batch_accumulate(const ModelParams& params, const EncoderMode& mode,
                                const NodeData& data, const EdgeBatch& batch,
                                BatchAccumulator& acc);

// Mean-reduced convenience wrapper.
std::pair<double, Gradients> structure_batch_loss(const ModelParams& params,
                                                  const EncoderMode& mode,
                                                  const NodeData& data,
                                                  const EdgeBatch& batch);

// Cross-entropy over a batch of labeled nodes. Dropout masks are drawn from
// `dropout_rng` when training; pass `fixed_scales` to pin them (gradient
// checks, replay).
void classification_batch_accumulate(const ModelParams& params, const EncoderMode& mode,
                                     const NodeData& data, std::span<const int> nodes,
                                     double dropout_rate, Rng* dropout_rng,
                                     BatchAccumulator& acc,
                                     const std::vector<Eigen::VectorXd>* fixed_scales = nullptr);

std::pair<double, Gradients> classification_batch_loss(const ModelParams& params,
                                                       const EncoderMode& mode,
                                                       const NodeData& data,
                                                       std::span<const int> nodes,
                                                       double dropout_rate, Rng* dropout_rng);

}  // namespace ucmf
