#include <cmath>

#include "../oracles.hpp"
#include "doctest.h"
#include "lri/bounds.hpp"
#include "lri/error.hpp"
#include "lri/matrices.hpp"
#include "lri/rng.hpp"

using namespace lri;

namespace {

GammaGraph graph_from(const std::vector<std::vector<bool>>& adj) {
  GammaGraph g(adj.size(), 0.0);
  for (std::size_t i = 0; i < adj.size(); ++i)
    for (std::size_t j = i + 1; j < adj.size(); ++j)
      if (adj[i][j]) g.add_edge(i, j);
  return g;
}

bool is_clique(const GammaGraph& g, const std::vector<std::size_t>& c) {
  for (std::size_t a = 0; a < c.size(); ++a)
    for (std::size_t b = a + 1; b < c.size(); ++b)
      if (!g.adjacent(c[a], c[b])) return false;
  return true;
}

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("probabilistic upper bound") {
    CHECK(std::abs(probabilistic_upper_bound(256, 64) - 0.58871) <= 1e-5);
    for (double N : {10.0, 256.0, 1e6}) CHECK(probabilistic_upper_bound(N, 4 * std::log(N)) == doctest::Approx(1.0).epsilon(1e-15));
    double prev = 10.0;
    for (double n = 1; n <= 1e6; n *= 3) {
      const double v = probabilistic_upper_bound(2, n);
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-2);
    CHECK_THROWS_AS(probabilistic_upper_bound(1, 4), ParameterError);
  }

  TEST_CASE("volume rank lower bound") {
    CHECK(volume_rank_lower_bound(216) == 3);
    CHECK(volume_rank_lower_bound(217) == 4);
    CHECK(volume_rank_lower_bound(1) == 0);
    CHECK(volume_rank_lower_bound(2) == 1);
    CHECK(volume_rank_lower_bound(6) == 1);
    CHECK(volume_rank_lower_bound(7) == 2);
    std::uint64_t p = 1;
    for (std::size_t k = 1; k <= 24; ++k) {
      p *= 6;
      CHECK(volume_rank_lower_bound(p) == k);
      CHECK(volume_rank_lower_bound(p + 1) == k + 1);
    }
    CHECK(volume_rank_lower_bound(~0ULL) == 25);
  }

  TEST_CASE("volume argument checks") {
    const VolumeReport id = volume_argument_verify(make_identity(12));
    CHECK(id.premise_ok);
    CHECK(id.separated);
    CHECK(id.diameter_ok);
    CHECK(id.rank_ok);
    CHECK(id.min_separation == doctest::Approx(1.0));
    CHECK(id.violations.empty());

    BlockSparseOptions golay;
    golay.block_size = 64;
    golay.generator = BlockGenerator::golay;
    const VolumeReport g = volume_argument_verify(make_block_sparse(64, 24, 1, golay));
    CHECK(g.premise_ok);
    CHECK(g.separated);
    CHECK(g.diameter_ok);
    CHECK(g.rank_ok);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) CHECK_FALSE(volume_argument_verify(make_random_sign(4096, 2, seed)).premise_ok);
  }

  TEST_CASE("theorem density bound") {
    CHECK(std::abs(theorem_density_bound(1024, 64, 1) - 0.04477) <= 1e-4);
    for (double N : {16.0, 1024.0, 1e5}) CHECK(theorem_density_bound(N, std::log(N), 1) == doctest::Approx(1.0 / std::log(3.0)));
    for (double N : {64.0, 4096.0}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double n = 1; n <= 4096; n += 0.5) {
        const double v = theorem_density_bound(N, n, 1);
        CHECK(v > 0.0);
        CHECK(v < prev + 1e-12);
        prev = v;
      }
    }
    CHECK_THROWS_AS(theorem_density_bound(2, 4, 1), ParameterError);
    CHECK_THROWS_AS(theorem_density_bound(100, 4, 0), ParameterError);
  }

  TEST_CASE("gamma threshold") {
    CHECK(gamma_threshold(1024, 64, 1) == 0.015625);
    CHECK(std::abs(gamma_threshold(1024, 16, 1) - 0.10830) <= 1e-5);
    const double L = std::log(1024.0);
    CHECK(gamma_threshold(1024, L * L, 1) == doctest::Approx(1.0 / (L * L)));
    CHECK(gamma_threshold(1024, L * L * 0.9, 1) > 1.0 / (L * L * 0.9));
    CHECK(gamma_threshold(1024, L * L * 1.1, 1) == doctest::Approx(1.0 / (L * L * 1.1)));
    double prev = std::numeric_limits<double>::infinity();
    for (double n = 1; n <= 4096; n += 1) {
      const double v = gamma_threshold(1024, n, 1);
      CHECK(v < prev + 1e-12);
      prev = v;
    }
  }

  TEST_CASE("turan and implied density") {
    CHECK(turan_edge_bound(10, 3) == 25.0);
    CHECK(turan_edge_bound(7, 2) == 0.0);
    CHECK(turan_edge_bound(10, 11) >= 45.0);
    CHECK(implied_density_lower(10, 3) == doctest::Approx(0.4));
    CHECK(implied_density_lower(10, 2) == doctest::Approx(0.9));
    CHECK(implied_density_lower(10, 11) == 0.0);
    CHECK_THROWS_AS(turan_edge_bound(10, 1), ParameterError);
  }

  TEST_CASE("width incompressibility bracket") {
    CHECK(width_incompressibility_M(64, 0.5) == 55);
    CHECK(width_incompressibility_M(10, 0.5) <= 2);
    std::uint64_t prev = 0;
    for (double n = 1; n <= 400; n += 7) {
      const std::uint64_t v = width_incompressibility_M(n, 0.5);
      CHECK(v >= prev);
      prev = v;
    }
    prev = 0;
    for (double g = 0.05; g < 1.0; g += 0.05) {
      const std::uint64_t v = width_incompressibility_M(64, g);
      CHECK(v >= prev);
      prev = v;
    }
  }

  TEST_CASE("bound summary") {
    const BoundSummary b = bound_summary(1024, 64, 1);
    CHECK(b.probabilistic_upper == probabilistic_upper_bound(1024, 64));
    CHECK(b.volume_rank_lower == 4);
    CHECK(b.theorem_density_lower == theorem_density_bound(1024, 64, 1));
    CHECK(b.gamma_threshold == 0.015625);
  }

  TEST_CASE("gamma graph examples") {
    const GammaGraph k = gamma_graph(make_identity(9), 0.5);
    CHECK(k.edge_count() == 36);
    const FactoredMatrix ones(Matrix::Ones(6, 1), Matrix::Ones(1, 6));
    CHECK(gamma_graph(ones, 0.99).edge_count() == 0);

    const FactoredMatrix A = make_random_sign(96, 24, 3);
    const RowMatrix& d = A.dense();
    for (double gamma : {0.1, 0.2, 0.4}) {
      const GammaGraph g = gamma_graph(A, gamma);
      std::size_t edges = 0, large = 0;
      for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
          if (i < j && std::max(std::abs(d(i, j)), std::abs(d(j, i))) <= gamma) ++edges;
          if (i != j && std::abs(d(i, j)) > gamma) ++large;
        }
      CHECK(g.edge_count() == edges);
      CHECK(g.edge_count() == 96 * 95 / 2 - large / 2);  // A is symmetric
      for (std::size_t i = 0; i < 96; ++i) CHECK_FALSE(g.adjacent(i, i));
    }
  }

  TEST_CASE("max clique small graphs") {
    GammaGraph k5(5, 0.0);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) k5.add_edge(i, j);
    CHECK(max_clique(k5).size() == 5);
    GammaGraph c5(5, 0.0);
    for (std::size_t i = 0; i < 5; ++i) c5.add_edge(i, (i + 1) % 5);
    CHECK(max_clique(c5).size() == 2);
    GammaGraph t(10, 0.0);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 5; j < 10; ++j) t.add_edge(i, j);
    CHECK(max_clique(t).size() == 2);
    CHECK(t.edge_count() == 25);
    CHECK(max_clique(GammaGraph(0, 0.0)).empty());
    CHECK(max_clique(GammaGraph(3, 0.0)).size() == 1);
    CHECK_THROWS_AS(max_clique(GammaGraph(201, 0.0)), SizeError);
    CHECK(max_clique(GammaGraph(201, 0.0), 201).size() == 1);
  }

  TEST_CASE("max clique matches brute force up to 16 vertices") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 120; ++trial) {
      const std::size_t n = 1 + rng.below(16);
      const double p = 0.1 + 0.85 * rng.uniform();
      std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) adj[i][j] = adj[j][i] = rng.uniform() < p;
      const GammaGraph g = graph_from(adj);
      const auto c = max_clique(g);
      CHECK(is_clique(g, c));
      CHECK(std::is_sorted(c.begin(), c.end()));
      CHECK(c.size() == oracle::brute_force_clique(adj));
      const auto greedy = greedy_clique(g);
      CHECK(is_clique(g, greedy));
      CHECK(greedy.size() <= c.size());
      // Turan's theorem as a cross-check of the clique number.
      CHECK(double(g.edge_count()) <= turan_edge_bound(double(n), double(c.size() + 1)) + 1e-9);
    }
  }

  TEST_CASE("max clique is deterministic") {
    const GammaGraph g = gamma_graph(make_random_sign(150, 32, 4), 0.2);
    CHECK(max_clique(g) == max_clique(g));
  }

  TEST_CASE("gamma-graph cliques pass the identity check and satisfy Turan") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const FactoredMatrix A = make_random_sign(120, 24, seed);
      for (double gamma : {0.05, 0.15, 0.3}) {
        const GammaGraph g = gamma_graph(A, gamma);
        const auto c = max_clique(g);
        CHECK(clique_identity_check(A, c, gamma).ok);
        CHECK(double(g.edge_count()) <= turan_edge_bound(120, double(c.size() + 1)) + 1e-9);
      }
    }
  }

  TEST_CASE("clique identity check examples") {
    const FactoredMatrix I = make_identity(6);
    CHECK(clique_identity_check(I, {0, 2, 5}, 0.0).ok);
    Matrix left = Matrix::Identity(4, 4);
    left(1, 3) = 0.31;
    const FactoredMatrix A(left, Matrix::Identity(4, 4));
    const CliqueCheck bad = clique_identity_check(A, {0, 1, 3}, 0.3);
    CHECK_FALSE(bad.ok);
    CHECK(bad.witness == std::pair<std::size_t, std::size_t>{1, 3});
    CHECK(bad.max_offdiag == doctest::Approx(0.31));
    CHECK(clique_identity_check(A, {0, 2, 3}, 0.3).ok);
  }
}
