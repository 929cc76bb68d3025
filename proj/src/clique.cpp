#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "lri/bounds.hpp"
#include "lri/error.hpp"

namespace lri {

GammaGraph::GammaGraph(std::size_t vertices, double gamma)
    : n_(vertices), words_((vertices + 63) / 64), gamma_(gamma), bits_(n_ * words_, 0) {}

void GammaGraph::add_edge(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_) throw DimensionError("GammaGraph: vertex out of range");
  if (i == j) return;
  bits_[i * words_ + j / 64] |= std::uint64_t{1} << (j % 64);
  bits_[j * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
}

bool GammaGraph::adjacent(std::size_t i, std::size_t j) const {
  return (bits_[i * words_ + j / 64] >> (j % 64)) & 1U;
}

std::size_t GammaGraph::degree(std::size_t i) const {
  std::size_t d = 0;
  for (std::size_t w = 0; w < words_; ++w) d += static_cast<std::size_t>(std::popcount(bits_[i * words_ + w]));
  return d;
}

std::size_t GammaGraph::edge_count() const {
  std::size_t twice = 0;
  for (std::uint64_t w : bits_) twice += static_cast<std::size_t>(std::popcount(w));
  return twice / 2;
}

GammaGraph gamma_graph(const RowMatrix& a, double gamma) {
  if (a.rows() != a.cols()) throw DimensionError("gamma_graph: matrix must be square");
  const auto N = static_cast<std::size_t>(a.rows());
  GammaGraph g(N, gamma);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      if (std::max(std::abs(a(ii, jj)), std::abs(a(jj, ii))) <= gamma) g.add_edge(i, j);
    }
  }
  return g;
}

GammaGraph gamma_graph(const FactoredMatrix& A, double gamma) { return gamma_graph(A.dense(), gamma); }

namespace {

using Bits = std::vector<std::uint64_t>;

bool any(const Bits& b) {
  return std::any_of(b.begin(), b.end(), [](std::uint64_t w) { return w != 0; });
}

// Branch and bound in a relabelled graph where vertex order == index order.
class CliqueSearch {
 public:
  explicit CliqueSearch(std::vector<Bits> adj) : adj_(std::move(adj)), words_(adj_.empty() ? 0 : adj_[0].size()) {}

  std::vector<std::size_t> run(std::size_t n) {
    Bits all(words_, 0);
    for (std::size_t v = 0; v < n; ++v) all[v / 64] |= std::uint64_t{1} << (v % 64);
    if (n > 0) expand(all);
    return best_;
  }

 private:
  // Greedy sequential colouring; vertices come out with nondecreasing colour.
  void colour(const Bits& p, std::vector<std::size_t>& order, std::vector<std::size_t>& colours) const {
    Bits q = p;
    std::size_t c = 0;
    while (any(q)) {
      ++c;
      Bits r = q;
      while (any(r)) {
        std::size_t w = 0;
        while (r[w] == 0) ++w;
        const std::size_t v = w * 64 + static_cast<std::size_t>(std::countr_zero(r[w]));
        r[w] &= r[w] - 1;
        q[v / 64] &= ~(std::uint64_t{1} << (v % 64));
        for (std::size_t k = 0; k < words_; ++k) r[k] &= ~adj_[v][k];
        order.push_back(v);
        colours.push_back(c);
      }
    }
  }

  void expand(Bits p) {
    std::vector<std::size_t> order, colours;
    colour(p, order, colours);
    for (std::size_t idx = order.size(); idx-- > 0;) {
      if (current_.size() + colours[idx] <= best_.size()) return;
      const std::size_t v = order[idx];
      current_.push_back(v);
      Bits next(words_);
      for (std::size_t k = 0; k < words_; ++k) next[k] = p[k] & adj_[v][k];
      if (any(next)) {
        expand(next);
      } else if (current_.size() > best_.size()) {
        best_ = current_;
      }
      current_.pop_back();
      p[v / 64] &= ~(std::uint64_t{1} << (v % 64));
    }
  }

  std::vector<Bits> adj_;
  std::size_t words_;
  std::vector<std::size_t> current_;
  std::vector<std::size_t> best_;
};

}  // namespace

std::vector<std::size_t> max_clique(const GammaGraph& g, std::size_t vertex_cap) {
  const std::size_t n = g.vertex_count();
  if (n > vertex_cap) {
    throw SizeError("max_clique: " + std::to_string(n) + " vertices exceed the cap of " +
                    std::to_string(vertex_cap) + "; use greedy_clique for a lower bound");
  }
  // Degree-descending order, ties by smallest index.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> deg(n);
  for (std::size_t v = 0; v < n; ++v) deg[v] = g.degree(v);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return deg[a] > deg[b]; });

  const std::size_t words = (n + 63) / 64;
  std::vector<Bits> adj(n, Bits(words, 0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (g.adjacent(perm[a], perm[b])) adj[a][b / 64] |= std::uint64_t{1} << (b % 64);
    }
  }
  std::vector<std::size_t> found = CliqueSearch(std::move(adj)).run(n);
  for (std::size_t& v : found) v = perm[v];
  std::sort(found.begin(), found.end());
  return found;
}

std::vector<std::size_t> greedy_clique(const GammaGraph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<std::size_t> clique;
  std::vector<char> cand(n, 1);
  while (true) {
    std::size_t best = n, best_deg = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (!cand[v]) continue;
      std::size_t d = 0;
      for (std::size_t u = 0; u < n; ++u)
        if (cand[u] && g.adjacent(v, u)) ++d;
      if (best == n || d > best_deg) {
        best = v;
        best_deg = d;
      }
    }
    if (best == n) break;
    clique.push_back(best);
    for (std::size_t u = 0; u < n; ++u)
      if (u == best || !g.adjacent(best, u)) cand[u] = 0;
  }
  std::sort(clique.begin(), clique.end());
  return clique;
}

}  // namespace lri
