#include "ucmf/analysis.hpp"

#include <cmath>

#include "ucmf/losses.hpp"

namespace ucmf {

double beta_coefficient(const Graph& graph, BetaVariant variant, int i, int j) {
  const double di = graph.degree(i);
  switch (variant) {
    case BetaVariant::Standard:
      return std::sqrt((di + 1.0) / (graph.degree(j) + 1.0)) / di;
    case BetaVariant::Simple:
      return 1.0 / di;
    case BetaVariant::None:
      return 1.0;
  }
  return 1.0;
}

SmoothingOperator::SmoothingOperator(const Graph& graph, BetaVariant variant)
    : graph_(&graph), variant_(variant) {
  offsets_.assign(graph.n_nodes() + 1, 0);
  for (int i = 0; i < graph.n_nodes(); ++i)
    offsets_[i + 1] = offsets_[i] + graph.degree(i);
  coef_.reserve(offsets_.back());
  for (int i = 0; i < graph.n_nodes(); ++i)
    for (int j : graph.neighbors(i)) coef_.push_back(beta_coefficient(graph, variant, i, j));
}

double SmoothingOperator::coefficient(int i, int neighbor_index) const {
  return coef_[offsets_[i] + neighbor_index];
}

FactorizationTarget closed_form_target(const Graph& graph, int k) {
  if (k < 1) throw Error("negative-sample count must be >= 1");
  FactorizationTarget target;
  target.edges = graph.directed_edges();
  target.values.reserve(target.edges.size());
  const double total = static_cast<double>(graph.directed_edge_count());
  for (const auto& [i, j] : target.edges)
    target.values.push_back(
        std::log(total / (k * static_cast<double>(graph.degree(i)) * graph.degree(j))));
  return target;
}

std::vector<double> stationarity_residuals(const std::vector<double>& dots,
                                           const Graph& graph, int k, BetaVariant variant) {
  const auto edges = graph.directed_edges();
  if (dots.size() != edges.size())
    throw ShapeError("one dot product per directed edge expected");
  const double total = static_cast<double>(graph.directed_edge_count());
  std::vector<double> residuals(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    const double beta = beta_coefficient(graph, variant, i, j);
    const double weight = k * beta * graph.degree(i) * graph.degree(j) / total;
    residuals[e] = -beta * sigmoid(-dots[e]) + weight * sigmoid(dots[e]);
  }
  return residuals;
}

double stationarity_residual(const std::vector<double>& dots, const Graph& graph, int k,
                             BetaVariant variant) {
  double max_abs = 0.0;
  for (double r : stationarity_residuals(dots, graph, k, variant))
    max_abs = std::max(max_abs, std::abs(r));
  return max_abs;
}

std::vector<double> edge_dots(const Eigen::MatrixXd& embeddings, const Graph& graph) {
  std::vector<double> dots;
  for (const auto& [i, j] : graph.directed_edges())
    dots.push_back(embeddings.row(i).dot(embeddings.row(j)));
  return dots;
}

Eigen::MatrixXd free_factorization_fit(const Graph& graph, int k, int dim,
                                       std::uint64_t seed, BetaVariant variant,
                                       const FitOptions& options) {
  const int n = graph.n_nodes();
  Rng rng(seed);
  Eigen::MatrixXd v(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) v(i, d) = rng.uniform_range(-0.5, 0.5);

  const double total = static_cast<double>(graph.directed_edge_count());
  const auto edges = graph.directed_edges();

  // Adam on the full objective; every directed edge contributes its exact
  // positive and expected-negative share, nothing is sampled.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, dim);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, dim);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, dim);
    double max_edge_grad = 0.0;
    for (const auto& [i, j] : edges) {
      const double beta = beta_coefficient(graph, variant, i, j);
      const double weight = k * beta * graph.degree(i) * graph.degree(j) / total;
      const double dot = v.row(i).dot(v.row(j));
      const double coef = -beta * sigmoid(-dot) + weight * sigmoid(dot);
      grad.row(i) += coef * v.row(j);
      grad.row(j) += coef * v.row(i);
      max_edge_grad = std::max(max_edge_grad, std::abs(coef));
    }
    if (max_edge_grad < options.tolerance) return v;
    m = b1 * m + (1.0 - b1) * grad;
    s = b2 * s + (1.0 - b2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(b1, iter);
    const double bc2 = 1.0 - std::pow(b2, iter);
    v.array() -= options.learning_rate * (m / bc1).array() / ((s / bc2).array().sqrt() + eps);
  }
  throw NonConvergenceError("factorization fit did not reach tolerance");
}

double avg_neighbor_cosine(const Eigen::MatrixXd& embeddings, const Graph& graph,
                           const SmoothingOperator& op) {
  const int n = graph.n_nodes();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(embeddings.cols());
    const auto nb = graph.neighbors(i);
    for (std::size_t t = 0; t < nb.size(); ++t)
      weighted += op.coefficient(i, static_cast<int>(t)) *
                  embeddings.row(nb[t]).transpose();
    const double wn = weighted.norm();
    const double vn = embeddings.row(i).norm();
    if (wn < kNormFloor || vn < kNormFloor)
      throw DegenerateNormError("degenerate neighbor sum at node " + std::to_string(i));
    sum += 1.0 - embeddings.row(i).dot(weighted.transpose()) / (vn * wn);
  }
  return sum / n;
}

double euler_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return (p - q).norm();
}

double cosine_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 1.0 - p.dot(q) / (p.norm() * q.norm());
}

double euler_cosine_gap(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  const double cos_dist = std::max(0.0, 1.0 - p.dot(q));
  return std::abs(euler_distance(p, q) - std::sqrt(2.0 * cos_dist));
}

}  // namespace ucmf
