#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "ucmf/error.hpp"
#include "ucmf/graph.hpp"
#include "ucmf/rng.hpp"

namespace ucmf {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kNormFloor = 1e-12;

// The trainable tensors. Unused blocks stay 0x0 (encoder in featureless runs,
// embedding table in featureful runs) so optimizers and serializers can walk
// one fixed tensor list.
struct ModelTensors {
  RowMatrixXd enc_weight;           // F x D
  Eigen::VectorXd enc_bias;         // D
  Eigen::MatrixXd hidden_weight;    // D x H
  Eigen::VectorXd hidden_bias;      // H
  Eigen::MatrixXd out_weight;       // H x C
  Eigen::VectorXd out_bias;         // C
  RowMatrixXd embeddings;           // N x D (featureless mode)

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("enc_weight", enc_weight);
    fn("enc_bias", enc_bias);
    fn("hidden_weight", hidden_weight);
    fn("hidden_bias", hidden_bias);
    fn("out_weight", out_weight);
    fn("out_bias", out_bias);
    fn("embeddings", embeddings);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    fn("enc_weight", enc_weight);
    fn("enc_bias", enc_bias);
    fn("hidden_weight", hidden_weight);
    fn("hidden_bias", hidden_bias);
    fn("out_weight", out_weight);
    fn("out_bias", out_bias);
    fn("embeddings", embeddings);
  }

  void set_zero();
  bool all_finite() const;
  bool same_shape(const ModelTensors& other) const;
  std::int64_t total_values() const;
};

struct ModelDims {
  int feat_dim = 0;   // F (0 in featureless mode)
  int rep_dim = 0;    // D
  int hidden_dim = 128;
  int n_classes = 0;  // C
  int n_nodes = 0;    // N (embedding rows in featureless mode)
  bool featureless = false;

  bool operator==(const ModelDims&) const = default;
};

struct ModelParams {
  ModelDims dims;
  ModelTensors t;
};

using Gradients = ModelTensors;

Gradients make_gradients(const ModelParams& params);

// dst += src, tensor by tensor; shapes must already agree.
void add_tensors(ModelTensors& dst, const ModelTensors& src);

// Glorot-style uniform fan-based init. Encoder bias gets the same fan-based
// range as the weights so an all-zero feature row still produces a nonzero
// pre-unitization vector; classifier biases start at zero.
ModelParams init_params(const ModelDims& dims, Rng& rng);

// --- unitization -----------------------------------------------------------

// v / ||v||; throws DegenerateNormError when ||v|| < kNormFloor.
Eigen::VectorXd unitize(const Eigen::VectorXd& v);

// Pull a gradient w.r.t. the unit vector back through the normalization:
// grad_z = (I - v v^T) grad_v / ||z||.
Eigen::VectorXd unitize_backward(const Eigen::VectorXd& unit_v, double z_norm,
                                 const Eigen::VectorXd& grad_v);

// --- encoder ---------------------------------------------------------------

struct EncoderMode {
  bool featureless = false;
  bool unitize = true;  // off in the no-unitization ablation
};

struct EncodeCache {
  Eigen::VectorXd z;  // pre-unitization
  Eigen::VectorXd v;  // representation consumed by losses
  double z_norm = 0.0;
};

EncodeCache encode_node(const ModelParams& params, const EncoderMode& mode,
                        const NodeData& data, int node);

void encode_backward(const ModelParams& params, const EncoderMode& mode,
                     const NodeData& data, int node, const EncodeCache& cache,
                     const Eigen::VectorXd& grad_v, Gradients& out);

// --- classifier -------------------------------------------------------------

struct ClassifyCache {
  Eigen::VectorXd input;        // v
  Eigen::VectorXd hidden_pre;   // before ReLU
  Eigen::VectorXd dropout_scale;  // per-unit multiplier, all ones in eval
  Eigen::VectorXd hidden;       // ReLU + dropout applied
  Eigen::VectorXd logits;
  Eigen::VectorXd probs;
};

// Inverted dropout: units kept with probability 1-rate and scaled by
// 1/(1-rate), so eval mode is exactly the identity.
Eigen::VectorXd draw_dropout_scale(int units, double rate, Rng& rng);

ClassifyCache classify_forward(const ModelParams& params, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& dropout_scale);

// Convenience forward matching the (params, v, training) contract.
Eigen::VectorXd classify(const ModelParams& params, const Eigen::VectorXd& v,
                         bool training, double dropout_rate, Rng* rng);

// Accumulates classifier gradients and returns the gradient w.r.t. the input
// representation.
Eigen::VectorXd classify_backward(const ModelParams& params, const ClassifyCache& cache,
                                  const Eigen::VectorXd& grad_logits, Gradients& out);

// --- regularization & optimizers --------------------------------------------

// d/dW of l2 * ||W||^2 summed over weight matrices only (biases and the free
// embedding table are not penalized).
void add_l2_gradient(const ModelParams& params, double l2, Gradients& out);
double l2_penalty(const ModelParams& params, double l2);

enum class OptimizerKind { Adam, Sgd };

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, const ModelParams& params);

  void step(ModelParams& params, const Gradients& grads);

  double learning_rate() const { return lr_; }

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  Gradients m_, v_;
};

}  // namespace ucmf
