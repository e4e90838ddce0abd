#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ucmf/graph.hpp"
#include "ucmf/nn.hpp"

namespace ucmf {

// Neighbor-averaging coefficient families. `Standard` is the symmetric
//-normalized convolution coefficient d_i^-1 sqrt((d_i+1)/(d_j+1)); `Simple`
// is the row-normalized variant d_i^-1; `None` drops the weight entirely
// (the co-trained model's own loss). All three share the same stationary
// dot products, which the fit-based oracle verifies numerically.
enum class BetaVariant { Standard, Simple, None };

double beta_coefficient(const Graph& graph, BetaVariant variant, int i, int j);

// Per-edge coefficient table for one variant.
class SmoothingOperator {
 public:
  SmoothingOperator(const Graph& graph, BetaVariant variant);

  double coefficient(int i, int neighbor_index) const;
  BetaVariant variant() const { return variant_; }

 private:
  const Graph* graph_;
  BetaVariant variant_;
  std::vector<double> coef_;     // aligned with the graph CSR neighbor array
  std::vector<int> offsets_;
};

// log(|G| / (k d_i d_j)) on observed edges; non-edges are masked, never
// materialized, so the log of a zero entry cannot arise.
struct FactorizationTarget {
  std::vector<std::pair<int, int>> edges;  // directed, canonical order
  std::vector<double> values;

  double value_at(std::size_t idx) const { return values[idx]; }
};

FactorizationTarget closed_form_target(const Graph& graph, int k);

// Derivative of the local edge loss w.r.t. the dot product, evaluated at the
// supplied per-edge dots:  -beta_ij sigmoid(-x) + (k beta_ij d_i d_j / |G|) sigmoid(x).
// Signed, per directed edge in canonical order.
std::vector<double> stationarity_residuals(const std::vector<double>& edge_dots,
                                           const Graph& graph, int k,
                                           BetaVariant variant = BetaVariant::Standard);

// Max absolute residual over edges.
double stationarity_residual(const std::vector<double>& edge_dots, const Graph& graph,
                             int k, BetaVariant variant = BetaVariant::Standard);

struct FitOptions {
  int max_iters = 20000;
  double learning_rate = 0.05;
  double tolerance = 1e-6;  // max-abs-gradient stopping criterion
};

// Unconstrained embeddings minimizing the exact (sampling-free) sum of local
// edge losses by full-batch gradient descent. Intended for tiny graphs where
// the fitted edge dot products can be compared against closed_form_target.
// Throws NonConvergenceError if the gradient never falls under tolerance.
Eigen::MatrixXd free_factorization_fit(const Graph& graph, int k, int dim,
                                       std::uint64_t seed,
                                       BetaVariant variant = BetaVariant::None,
                                       const FitOptions& options = {});

std::vector<double> edge_dots(const Eigen::MatrixXd& embeddings, const Graph& graph);

// Mean over nodes of the cosine distance between a node's representation and
// the operator-weighted sum of its neighbors' representations.
double avg_neighbor_cosine(const Eigen::MatrixXd& embeddings, const Graph& graph,
                           const SmoothingOperator& op);

double euler_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double cosine_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// | Euler(p,q) - sqrt(2 Cosine(p,q)) | for unit vectors; identically ~0.
double euler_cosine_gap(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace ucmf
