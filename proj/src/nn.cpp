#include "ucmf/nn.hpp"

#include <cmath>

namespace ucmf {

void ModelTensors::set_zero() {
  for_each([](const char*, auto& t) { t.setZero(); });
}

bool ModelTensors::all_finite() const {
  bool ok = true;
  for_each([&](const char*, const auto& t) {
    if (t.size() > 0 && !t.allFinite()) ok = false;
  });
  return ok;
}

bool ModelTensors::same_shape(const ModelTensors& other) const {
  return enc_weight.rows() == other.enc_weight.rows() &&
         enc_weight.cols() == other.enc_weight.cols() &&
         enc_bias.size() == other.enc_bias.size() &&
         hidden_weight.rows() == other.hidden_weight.rows() &&
         hidden_weight.cols() == other.hidden_weight.cols() &&
         hidden_bias.size() == other.hidden_bias.size() &&
         out_weight.rows() == other.out_weight.rows() &&
         out_weight.cols() == other.out_weight.cols() &&
         out_bias.size() == other.out_bias.size() &&
         embeddings.rows() == other.embeddings.rows() &&
         embeddings.cols() == other.embeddings.cols();
}

std::int64_t ModelTensors::total_values() const {
  std::int64_t n = 0;
  for_each([&](const char*, const auto& t) { n += t.size(); });
  return n;
}

Gradients make_gradients(const ModelParams& params) {
  Gradients g = params.t;
  g.set_zero();
  return g;
}

void add_tensors(ModelTensors& dst, const ModelTensors& src) {
  if (!dst.same_shape(src)) throw ShapeError("tensor shape mismatch in accumulation");
  if (src.enc_weight.size() > 0) dst.enc_weight += src.enc_weight;
  if (src.enc_bias.size() > 0) dst.enc_bias += src.enc_bias;
  if (src.hidden_weight.size() > 0) dst.hidden_weight += src.hidden_weight;
  if (src.hidden_bias.size() > 0) dst.hidden_bias += src.hidden_bias;
  if (src.out_weight.size() > 0) dst.out_weight += src.out_weight;
  if (src.out_bias.size() > 0) dst.out_bias += src.out_bias;
  if (src.embeddings.size() > 0) dst.embeddings += src.embeddings;
}

namespace {

void fill_glorot(RowMatrixXd& m, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform_range(-limit, limit);
}

void fill_glorot(Eigen::MatrixXd& m, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform_range(-limit, limit);
}

void fill_glorot(Eigen::VectorXd& v, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform_range(-limit, limit);
}

}  // namespace

ModelParams init_params(const ModelDims& dims, Rng& rng) {
  if (dims.rep_dim < 1) throw ShapeError("representation dimension must be >= 1");
  ModelParams p;
  p.dims = dims;
  if (dims.featureless) {
    p.t.embeddings.resize(dims.n_nodes, dims.rep_dim);
    fill_glorot(p.t.embeddings, dims.rep_dim, dims.rep_dim, rng);
  } else {
    p.t.enc_weight.resize(dims.feat_dim, dims.rep_dim);
    fill_glorot(p.t.enc_weight, dims.feat_dim, dims.rep_dim, rng);
    p.t.enc_bias.resize(dims.rep_dim);
    fill_glorot(p.t.enc_bias, dims.feat_dim, dims.rep_dim, rng);
  }
  if (dims.n_classes > 0) {
    p.t.hidden_weight.resize(dims.rep_dim, dims.hidden_dim);
    fill_glorot(p.t.hidden_weight, dims.rep_dim, dims.hidden_dim, rng);
    p.t.hidden_bias = Eigen::VectorXd::Zero(dims.hidden_dim);
    p.t.out_weight.resize(dims.hidden_dim, dims.n_classes);
    fill_glorot(p.t.out_weight, dims.hidden_dim, dims.n_classes, rng);
    p.t.out_bias = Eigen::VectorXd::Zero(dims.n_classes);
  }
  return p;
}

Eigen::VectorXd unitize(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (n < kNormFloor) throw DegenerateNormError("cannot unitize a near-zero vector");
  return v / n;
}

Eigen::VectorXd unitize_backward(const Eigen::VectorXd& unit_v, double z_norm,
                                 const Eigen::VectorXd& grad_v) {
  return (grad_v - unit_v.dot(grad_v) * unit_v) / z_norm;
}

EncodeCache encode_node(const ModelParams& params, const EncoderMode& mode,
                        const NodeData& data, int node) {
  EncodeCache cache;
  if (mode.featureless) {
    if (params.t.embeddings.rows() != data.n_nodes)
      throw ShapeError("model has no embedding table for featureless encoding");
    cache.z = params.t.embeddings.row(node).transpose();
  } else {
    if (params.t.enc_weight.rows() != data.feat_dim || data.feat_dim == 0)
      throw ShapeError("encoder weight shape does not match the feature matrix");
    cache.z = params.t.enc_bias;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(data.features, node);
         it; ++it)
      cache.z += it.value() * params.t.enc_weight.row(it.col()).transpose();
  }
  if (mode.unitize) {
    cache.z_norm = cache.z.norm();
    if (cache.z_norm < kNormFloor)
      throw DegenerateNormError("degenerate representation at node " + std::to_string(node));
    cache.v = cache.z / cache.z_norm;
  } else {
    cache.z_norm = 1.0;
    cache.v = cache.z;
  }
  return cache;
}

void encode_backward(const ModelParams& params, const EncoderMode& mode,
                     const NodeData& data, int node, const EncodeCache& cache,
                     const Eigen::VectorXd& grad_v, Gradients& out) {
  Eigen::VectorXd grad_z =
      mode.unitize ? unitize_backward(cache.v, cache.z_norm, grad_v) : grad_v;
  if (mode.featureless) {
    out.embeddings.row(node) += grad_z.transpose();
  } else {
    out.enc_bias += grad_z;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(data.features, node);
         it; ++it)
      out.enc_weight.row(it.col()) += it.value() * grad_z.transpose();
  }
  (void)params;
}

Eigen::VectorXd draw_dropout_scale(int units, double rate, Rng& rng) {
  Eigen::VectorXd scale(units);
  if (rate <= 0.0) {
    scale.setOnes();
    return scale;
  }
  const double keep = 1.0 - rate;
  for (int i = 0; i < units; ++i) scale(i) = rng.uniform_real() < keep ? 1.0 / keep : 0.0;
  return scale;
}

ClassifyCache classify_forward(const ModelParams& params, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& dropout_scale) {
  ClassifyCache c;
  c.input = v;
  c.hidden_pre = params.t.hidden_weight.transpose() * v + params.t.hidden_bias;
  c.dropout_scale = dropout_scale;
  c.hidden = c.hidden_pre.cwiseMax(0.0).cwiseProduct(dropout_scale);
  c.logits = params.t.out_weight.transpose() * c.hidden + params.t.out_bias;
  // Max-shifted softmax.
  const double m = c.logits.maxCoeff();
  Eigen::VectorXd e = (c.logits.array() - m).exp();
  c.probs = e / e.sum();
  return c;
}

Eigen::VectorXd classify(const ModelParams& params, const Eigen::VectorXd& v,
                         bool training, double dropout_rate, Rng* rng) {
  const int h = static_cast<int>(params.t.hidden_bias.size());
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(h);
  if (training && rng != nullptr) scale = draw_dropout_scale(h, dropout_rate, *rng);
  return classify_forward(params, v, scale).probs;
}

Eigen::VectorXd classify_backward(const ModelParams& params, const ClassifyCache& cache,
                                  const Eigen::VectorXd& grad_logits, Gradients& out) {
  out.out_weight += cache.hidden * grad_logits.transpose();
  out.out_bias += grad_logits;
  Eigen::VectorXd grad_hidden = params.t.out_weight * grad_logits;
  grad_hidden = grad_hidden.cwiseProduct(cache.dropout_scale);
  for (Eigen::Index i = 0; i < grad_hidden.size(); ++i)
    if (cache.hidden_pre(i) <= 0.0) grad_hidden(i) = 0.0;
  out.hidden_weight += cache.input * grad_hidden.transpose();
  out.hidden_bias += grad_hidden;
  return params.t.hidden_weight * grad_hidden;
}

void add_l2_gradient(const ModelParams& params, double l2, Gradients& out) {
  if (l2 == 0.0) return;
  if (params.t.enc_weight.size() > 0) out.enc_weight += 2.0 * l2 * params.t.enc_weight;
  if (params.t.hidden_weight.size() > 0)
    out.hidden_weight += 2.0 * l2 * params.t.hidden_weight;
  if (params.t.out_weight.size() > 0) out.out_weight += 2.0 * l2 * params.t.out_weight;
}

double l2_penalty(const ModelParams& params, double l2) {
  double s = 0.0;
  s += params.t.enc_weight.squaredNorm();
  s += params.t.hidden_weight.squaredNorm();
  s += params.t.out_weight.squaredNorm();
  return l2 * s;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, const ModelParams& params)
    : kind_(kind), lr_(learning_rate), m_(params.t), v_(params.t) {
  m_.set_zero();
  v_.set_zero();
}

void Optimizer::step(ModelParams& params, const Gradients& grads) {
  if (!params.t.same_shape(grads)) throw ShapeError("gradient/parameter shape mismatch");
  if (kind_ == OptimizerKind::Sgd) {
    auto sgd = [&](auto& p, const auto& g) {
      if (p.size() > 0) p -= lr_ * g;
    };
    sgd(params.t.enc_weight, grads.enc_weight);
    sgd(params.t.enc_bias, grads.enc_bias);
    sgd(params.t.hidden_weight, grads.hidden_weight);
    sgd(params.t.hidden_bias, grads.hidden_bias);
    sgd(params.t.out_weight, grads.out_weight);
    sgd(params.t.out_bias, grads.out_bias);
    sgd(params.t.embeddings, grads.embeddings);
    return;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    if (p.size() == 0) return;
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr_ * (m / bc1).array() / ((v / bc2).array().sqrt() + eps_);
  };
  update(params.t.enc_weight, m_.enc_weight, v_.enc_weight, grads.enc_weight);
  update(params.t.enc_bias, m_.enc_bias, v_.enc_bias, grads.enc_bias);
  update(params.t.hidden_weight, m_.hidden_weight, v_.hidden_weight, grads.hidden_weight);
  update(params.t.hidden_bias, m_.hidden_bias, v_.hidden_bias, grads.hidden_bias);
  update(params.t.out_weight, m_.out_weight, v_.out_weight, grads.out_weight);
  update(params.t.out_bias, m_.out_bias, v_.out_bias, grads.out_bias);
  update(params.t.embeddings, m_.embeddings, v_.embeddings, grads.embeddings);
}

}  // namespace ucmf
