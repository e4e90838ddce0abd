#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ucmf/datasets.hpp"
#include "ucmf/nn.hpp"
#include "ucmf/rng.hpp"

namespace testutil {

// Visits the seven tensor slots of two congruent tensor packs in lockstep.
template <typename A, typename B, typename Fn>
void zip_tensors(A& a, B& b, Fn&& fn) {
  fn(a.enc_weight, b.enc_weight);
  fn(a.enc_bias, b.enc_bias);
  fn(a.hidden_weight, b.hidden_weight);
  fn(a.hidden_bias, b.hidden_bias);
  fn(a.out_weight, b.out_weight);
  fn(a.out_bias, b.out_bias);
  fn(a.embeddings, b.embeddings);
}

struct FdResult {
  double max_rel_err = 0.0;
  long checked = 0;
};

// Central finite differences against an analytic gradient. loss_fn must be a
// deterministic function of the parameters.
inline FdResult finite_difference_check(
    ucmf::ModelParams& params, const ucmf::Gradients& analytic,
    const std::function<double(const ucmf::ModelParams&)>& loss_fn, double h = 1e-5) {
  FdResult result;
  zip_tensors(params.t, analytic, [&](auto& p, const auto& g) {
    for (Eigen::Index idx = 0; idx < p.size(); ++idx) {
      double* cell = p.data() + idx;
      const double saved = *cell;
      *cell = saved + h;
      const double up = loss_fn(params);
      *cell = saved - h;
      const double down = loss_fn(params);
      *cell = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = *(g.data() + idx);
      const double err = std::abs(a - numeric) / (std::max(std::abs(a), std::abs(numeric)) + 1e-6);
      if (err > result.max_rel_err) result.max_rel_err = err;
      ++result.checked;
    }
  });
  return result;
}

// Wilson-Hilferty approximation of the chi-squared quantile; close enough for
// goodness-of-fit gates at the df values used here.
inline double chi_squared_critical(int df, double z_alpha = 2.3263478740408408 /* 99% */) {
  const double t = 2.0 / (9.0 * df);
  const double c = 1.0 - t + z_alpha * std::sqrt(t);
  return df * c * c * c;
}

inline double chi_squared_statistic(const std::vector<long>& observed,
                                    const std::vector<double>& probabilities, long draws) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = probabilities[i] * draws;
    const double diff = observed[i] - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

inline std::vector<double> ranks_with_ties(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks_with_ties(x);
  const auto ry = ranks_with_ties(y);
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

inline Eigen::VectorXd random_unit_vector(int dim, ucmf::Rng& rng) {
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

// A small random labeled graph instance for gradient checks.
struct TinyInstance {
  ucmf::Graph graph;
  ucmf::NodeData data;
  ucmf::ModelParams params;
  ucmf::EncoderMode mode;
};

inline TinyInstance make_tiny_instance(std::uint64_t seed, bool featureless,
                                       bool unitize = true) {
  ucmf::Rng rng(seed);
  TinyInstance inst;
  const int n = 5 + static_cast<int>(rng.uniform_index(3));
  inst.graph = ucmf::Graph::from_edges(
      n, ucmf::random_connected_edges(n, 0.3, seed * 31 + 1));

  const int feat_dim = featureless ? 0 : 3 + static_cast<int>(rng.uniform_index(3));
  const int rep_dim = 2 + static_cast<int>(rng.uniform_index(3));
  const int n_classes = 2 + static_cast<int>(rng.uniform_index(2));

  inst.data.n_nodes = n;
  inst.data.feat_dim = feat_dim;
  if (!featureless) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < n; ++i)
      for (int f = 0; f < feat_dim; ++f)
        if (rng.uniform_real() < 0.7) trips.emplace_back(i, f, rng.uniform_range(-1, 1));
    inst.data.features.resize(n, feat_dim);
    inst.data.features.setFromTriplets(trips.begin(), trips.end());
  }
  inst.data.n_classes = n_classes;
  inst.data.labels.resize(n);
  inst.data.split.assign(n, ucmf::Split::Train);
  for (int i = 0; i < n; ++i)
    inst.data.labels[i] = static_cast<int>(rng.uniform_index(n_classes));
  inst.data.rebuild_split_lists();

  ucmf::ModelDims dims;
  dims.featureless = featureless;
  dims.feat_dim = feat_dim;
  dims.rep_dim = rep_dim;
  dims.hidden_dim = 4 + static_cast<int>(rng.uniform_index(3));
  dims.n_classes = n_classes;
  dims.n_nodes = n;
  inst.params = ucmf::init_params(dims, rng);
  inst.mode = {featureless, unitize};
  return inst;
}

}  // namespace testutil
