#include "doctest.h"
#include "test_util.hpp"
#include "ucmf/analysis.hpp"
#include "ucmf/datasets.hpp"

using namespace ucmf;

namespace {

const std::vector<std::pair<std::string, Graph>>& oracle_graphs() {
  static const std::vector<std::pair<std::string, Graph>> graphs = {
      {"triangle", Graph::from_edges(3, triangle_edges())},
      {"4-cycle", Graph::from_edges(4, cycle_edges(4))},
      {"star", Graph::from_edges(4, star_edges(3))},
      {"two-clique-bridge", Graph::from_edges(6, two_clique_edges(3))},
  };
  return graphs;
}

}  // namespace

TEST_CASE("closed-form target on the triangle") {
  const Graph g = Graph::from_edges(3, triangle_edges());
  SUBCASE("k = 1") {
    const auto target = closed_form_target(g, 1);
    for (double v : target.values) CHECK(v == doctest::Approx(std::log(1.5)).epsilon(1e-12));
  }
  SUBCASE("k = 6") {
    const auto target = closed_form_target(g, 6);
    for (double v : target.values) CHECK(v == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  }
}

TEST_CASE("closed-form target is symmetric") {
  for (const auto& [name, g] : oracle_graphs()) {
    CAPTURE(name);
    const auto target = closed_form_target(g, 4);
    for (std::size_t e = 0; e < target.edges.size(); ++e) {
      const auto [i, j] = target.edges[e];
      // Find the reverse edge and compare.
      for (std::size_t f = 0; f < target.edges.size(); ++f)
        if (target.edges[f] == std::pair<int, int>{j, i})
          CHECK(target.values[e] == doctest::Approx(target.values[f]).epsilon(1e-14));
    }
  }
}

TEST_CASE("the closed form is a root of the local edge-loss derivative") {
  for (const auto& [name, g] : oracle_graphs()) {
    CAPTURE(name);
    for (int k : {1, 4, 16}) {
      const auto target = closed_form_target(g, k);
      for (BetaVariant beta :
           {BetaVariant::Standard, BetaVariant::Simple, BetaVariant::None}) {
        CHECK(stationarity_residual(target.values, g, k, beta) <= 1e-12);
      }
    }
  }
}

TEST_CASE("residual at zero dots on the triangle") {
  // Hand evaluation with the standard coefficient: beta = 1/2, so the
  // derivative at x = 0 is -1/2 * 1/2 + (1*1/2*2*2/6) * 1/2 = -1/12.
  const Graph g = Graph::from_edges(3, triangle_edges());
  const std::vector<double> zeros(6, 0.0);
  const auto residuals = stationarity_residuals(zeros, g, 1, BetaVariant::Standard);
  for (double r : residuals) CHECK(r == doctest::Approx(-1.0 / 12.0).epsilon(1e-12));
  CHECK(stationarity_residual(zeros, g, 1, BetaVariant::Standard) ==
        doctest::Approx(1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("residual sign change brackets the root") {
  const Graph g = Graph::from_edges(3, triangle_edges());
  const std::vector<double> low(6, -40.0), high(6, 40.0);
  for (double r : stationarity_residuals(low, g, 1)) CHECK(r < 0.0);
  for (double r : stationarity_residuals(high, g, 1)) CHECK(r > 0.0);
  // Limits: +k beta d_i d_j / |G| above, -beta below.
  const double beta = 0.5;
  const auto top = stationarity_residuals(high, g, 1);
  CHECK(top[0] == doctest::Approx(beta * 4.0 / 6.0).epsilon(1e-9));
  const auto bottom = stationarity_residuals(low, g, 1);
  CHECK(bottom[0] == doctest::Approx(-beta).epsilon(1e-9));
}

TEST_CASE("free factorization fit recovers the closed-form dot products") {
  SUBCASE("triangle, k = 1") {
    const Graph g = Graph::from_edges(3, triangle_edges());
    const auto v = free_factorization_fit(g, 1, 3, 11);
    const auto dots = edge_dots(v, g);
    for (double d : dots) CHECK(std::abs(d - std::log(1.5)) < 1e-2);
  }
  SUBCASE("4-cycle, k = 1") {
    const Graph g = Graph::from_edges(4, cycle_edges(4));
    const auto target = closed_form_target(g, 1);
    const auto v = free_factorization_fit(g, 1, 4, 12);
    const auto dots = edge_dots(v, g);
    for (std::size_t e = 0; e < dots.size(); ++e)
      CHECK(std::abs(dots[e] - target.values[e]) < 1e-2);
  }
  SUBCASE("the stationary point does not depend on the weighting") {
    const Graph g = Graph::from_edges(4, star_edges(3));
    const auto target = closed_form_target(g, 4);
    std::vector<std::vector<double>> fits;
    for (BetaVariant beta :
         {BetaVariant::Standard, BetaVariant::Simple, BetaVariant::None}) {
      const auto v = free_factorization_fit(g, 4, 4, 13, beta);
      fits.push_back(edge_dots(v, g));
    }
    for (const auto& dots : fits)
      for (std::size_t e = 0; e < dots.size(); ++e)
        CHECK(std::abs(dots[e] - target.values[e]) < 1e-2);
  }
}

TEST_CASE("fit reports non-convergence when starved of iterations") {
  const Graph g = Graph::from_edges(3, triangle_edges());
  FitOptions opts;
  opts.max_iters = 3;
  CHECK_THROWS_AS(free_factorization_fit(g, 1, 3, 5, BetaVariant::None, opts),
                  NonConvergenceError);
}

TEST_CASE("average neighbor cosine distance") {
  const Graph triangle = Graph::from_edges(3, triangle_edges());
  const SmoothingOperator op(triangle, BetaVariant::Standard);

  SUBCASE("identical representations are at distance zero") {
    Eigen::MatrixXd reps(3, 2);
    reps << 1, 0, 1, 0, 1, 0;
    CHECK(avg_neighbor_cosine(reps, triangle, op) == doctest::Approx(0.0));
  }
  SUBCASE("orthogonal basis representations are at distance one") {
    const Eigen::MatrixXd reps = Eigen::MatrixXd::Identity(3, 3);
    CHECK(avg_neighbor_cosine(reps, triangle, op) == doctest::Approx(1.0));
  }
  SUBCASE("star with orthogonal center") {
    const Graph star = Graph::from_edges(4, star_edges(3));
    const SmoothingOperator star_op(star, BetaVariant::Standard);
    Eigen::MatrixXd reps(4, 2);
    reps << 1, 0,  // center
        0, 1, 0, 1, 0, 1;
    CHECK(avg_neighbor_cosine(reps, star, star_op) == doctest::Approx(1.0));
  }
  SUBCASE("coefficient values match the degree formula") {
    // Center-to-leaf coefficient in a 3-leaf star: (1/3) sqrt(4/2).
    const Graph star = Graph::from_edges(4, star_edges(3));
    const SmoothingOperator std_op(star, BetaVariant::Standard);
    CHECK(std_op.coefficient(0, 0) ==
          doctest::Approx(std::sqrt(2.0) / 3.0).epsilon(1e-12));
    const SmoothingOperator simple_op(star, BetaVariant::Simple);
    CHECK(simple_op.coefficient(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("euler and cosine distances agree on the unit sphere") {
  Rng rng(2024);
  SUBCASE("fixed pairs") {
    Eigen::VectorXd p(2), q(2);
    p << 1, 0;
    q << 0, 1;
    CHECK(euler_cosine_gap(p, p) == doctest::Approx(0.0));
    CHECK(euler_cosine_gap(p, q) == doctest::Approx(0.0));
    CHECK(euler_distance(p, q) == doctest::Approx(std::sqrt(2.0)));
    CHECK(cosine_distance(p, q) == doctest::Approx(1.0));
  }
  SUBCASE("random unit pairs across dimensions") {
    double max_gap = 0.0;
    for (int t = 0; t < 10'000; ++t) {
      const int dim = 2 + static_cast<int>(rng.uniform_index(63));
      const Eigen::VectorXd p = testutil::random_unit_vector(dim, rng);
      const Eigen::VectorXd q = testutil::random_unit_vector(dim, rng);
      max_gap = std::max(max_gap, euler_cosine_gap(p, q));
    }
    CHECK(max_gap < 1e-9);
  }
}
