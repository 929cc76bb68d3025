#ifndef LRI_BOUNDS_HPP
#define LRI_BOUNDS_HPP

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "lri/matrices.hpp"

namespace lri {

// Closed-form bounds. Logarithms are natural throughout.

/// 2 sqrt(ln N / n)
double probabilistic_upper_bound(double N, double n);

/// Smallest integer n with 6^n >= N.
std::size_t volume_rank_lower_bound(std::uint64_t N);

/// c ln N / (n ln(2 + n / ln N))
double theorem_density_bound(double N, double n, double c);

/// c max(n^{-3/2} ln N, 1/n)
double gamma_threshold(double N, double n, double c);

/// (1 - 1/(M-1)) N^2 / 2, the Turan bound for K_M-free graphs.
double turan_edge_bound(double N, double M);

/// Fraction of ordered off-diagonal pairs that must be large when the gamma
/// graph has no M-clique: 2 max(0, N(N-1)/2 - turan_edge_bound(N, M)) / N^2.
double implied_density_lower(double N, double M);

/// ceil(exp(gamma^2 n / 4)): below this size the probabilistic construction
/// already gives a gamma-approximation, so the minimal incompressible M is at
/// least this large. A lower bracket, not the exact value.
std::uint64_t width_incompressibility_M(double n, double gamma);

struct BoundSummary {
  std::uint64_t N = 0;
  std::uint64_t n = 0;
  double gamma = 0.0;
  double c = 0.0;
  double probabilistic_upper = 0.0;
  std::size_t volume_rank_lower = 0;
  double theorem_density_lower = 0.0;
  double gamma_threshold = 0.0;
};

BoundSummary bound_summary(std::uint64_t N, std::uint64_t n, double c);

struct VolumeReport {
  bool premise_ok = false;
  double error = 0.0;
  bool separated = false;        // all pairwise l_inf column distances >= 1/3
  bool diameter_ok = false;      // all pairwise l_inf column distances <= 5/3
  bool rank_ok = false;          // n >= volume_rank_lower_bound(N)
  std::size_t required_rank = 0;
  double min_separation = 0.0;   // smallest certified pairwise lower bound
  double max_distance = 0.0;     // largest certified pairwise upper bound
  std::vector<std::pair<std::size_t, std::size_t>> violations;
};

/// Checks the consequences of error <= 1/3 used by the volume argument:
/// columns are 1/3-separated and lie within l_inf diameter 5/3, and the
/// rank meets the 6^n >= N bound.
VolumeReport volume_argument_verify(const FactoredMatrix& A);

// Simple undirected graph on N vertices, adjacency as bit rows.
class GammaGraph {
 public:
  GammaGraph(std::size_t vertices, double gamma);

  std::size_t vertex_count() const noexcept { return n_; }
  double gamma() const noexcept { return gamma_; }
  std::size_t words() const noexcept { return words_; }

  void add_edge(std::size_t i, std::size_t j);
  bool adjacent(std::size_t i, std::size_t j) const;
  std::size_t degree(std::size_t i) const;
  std::size_t edge_count() const;
  const std::uint64_t* row(std::size_t i) const { return bits_.data() + i * words_; }

 private:
  std::size_t n_;
  std::size_t words_;
  double gamma_;
  std::vector<std::uint64_t> bits_;
};

/// Edge {i, j} iff max(|A_ij|, |A_ji|) <= gamma, i != j.
GammaGraph gamma_graph(const FactoredMatrix& A, double gamma);
GammaGraph gamma_graph(const RowMatrix& dense, double gamma);

inline constexpr std::size_t default_vertex_cap = 200;

/// Exact maximum clique by branch and bound with greedy colouring bounds.
/// Vertices are returned ascending; among maximum cliques the search order
/// is fixed, so the result is deterministic. Throws SizeError above the cap.
std::vector<std::size_t> max_clique(const GammaGraph& g, std::size_t vertex_cap = default_vertex_cap);

/// Greedy clique (a lower bound) for graphs above the exact solver's cap.
std::vector<std::size_t> greedy_clique(const GammaGraph& g);

struct CliqueCheck {
  bool ok = false;
  double max_offdiag = 0.0;
  double max_diag_deviation = 0.0;
  double allowed_diag_deviation = 0.0;
  std::pair<std::size_t, std::size_t> witness{0, 0};  // worst off-diagonal pair
};

/// True iff every off-diagonal entry of A[clique, clique] has magnitude
/// <= gamma and every diagonal entry is within approx_error(A) of one.
CliqueCheck clique_identity_check(const FactoredMatrix& A, const std::vector<std::size_t>& clique,
                                  double gamma);

}  // namespace lri

#endif  // LRI_BOUNDS_HPP
