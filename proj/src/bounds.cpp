#include <algorithm>
#include <cmath>
#include <limits>

#include "lri/bounds.hpp"
#include "lri/error.hpp"

namespace lri {

namespace {

void require_size(double N, double n, double min_N, const char* who) {
  if (!(N >= min_N) || !(n >= 1.0) || !std::isfinite(N) || !std::isfinite(n)) {
    throw ParameterError(std::string(who) + ": need N >= " + std::to_string(static_cast<int>(min_N)) +
                         " and n >= 1");
  }
}

}  // namespace

double probabilistic_upper_bound(double N, double n) {
  require_size(N, n, 2.0, "probabilistic_upper_bound");
  return 2.0 * std::sqrt(std::log(N) / n);
}

std::size_t volume_rank_lower_bound(std::uint64_t N) {
  if (N == 0) throw ParameterError("volume_rank_lower_bound: N must be positive");
  // Integer powers, no logarithm rounding at the 6^k boundaries.
  std::size_t k = 0;
  unsigned __int128 p = 1;
  while (p < N) {
    p *= 6;
    ++k;
  }
  return k;
}

double theorem_density_bound(double N, double n, double c) {
  require_size(N, n, 3.0, "theorem_density_bound");
  if (!(c > 0.0)) throw ParameterError("theorem_density_bound: c must be positive");
  const double ln_n = std::log(N);
  return c * ln_n / (n * std::log(2.0 + n / ln_n));
}

double gamma_threshold(double N, double n, double c) {
  require_size(N, n, 3.0, "gamma_threshold");
  if (!(c > 0.0)) throw ParameterError("gamma_threshold: c must be positive");
  return c * std::max(std::log(N) / (n * std::sqrt(n)), 1.0 / n);
}

double turan_edge_bound(double N, double M) {
  if (!(M >= 2.0)) throw ParameterError("turan_edge_bound: M must be at least 2");
  if (!(N >= 0.0)) throw ParameterError("turan_edge_bound: N must be nonnegative");
  return (1.0 - 1.0 / (M - 1.0)) * N * N / 2.0;
}

double implied_density_lower(double N, double M) {
  const double bound = turan_edge_bound(N, M);
  if (!(N >= 1.0)) throw ParameterError("implied_density_lower: N must be positive");
  const double pairs = N * (N - 1.0) / 2.0;
  return 2.0 * std::max(0.0, pairs - bound) / (N * N);
}

std::uint64_t width_incompressibility_M(double n, double gamma) {
  if (!(n >= 1.0)) throw ParameterError("width_incompressibility_M: n must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ParameterError("width_incompressibility_M: gamma must lie in (0, 1)");
  }
  const double v = std::ceil(std::exp(gamma * gamma * n / 4.0));
  if (!(v < 18446744073709551616.0)) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(v);
}

BoundSummary bound_summary(std::uint64_t N, std::uint64_t n, double c) {
  const auto Nd = static_cast<double>(N);
  const auto nd = static_cast<double>(n);
  BoundSummary b;
  b.N = N;
  b.n = n;
  b.c = c;
  b.gamma_threshold = gamma_threshold(Nd, nd, c);
  b.gamma = b.gamma_threshold;
  b.probabilistic_upper = probabilistic_upper_bound(Nd, nd);
  b.volume_rank_lower = volume_rank_lower_bound(N);
  b.theorem_density_lower = theorem_density_bound(Nd, nd, c);
  return b;
}

VolumeReport volume_argument_verify(const FactoredMatrix& A) {
  VolumeReport r;
  const std::size_t N = A.n_dim();
  r.error = approx_error(A);
  r.required_rank = volume_rank_lower_bound(N);
  r.rank_ok = A.rank_budget() >= r.required_rank;
  r.premise_ok = r.error <= 1.0 / 3.0;
  if (!r.premise_ok) return r;

  const RowMatrix& a = A.dense();
  double max_off = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      if (i != j) max_off = std::max(max_off, std::abs(a(i, j)));

  // Column j is v^j = A(:, j). Coordinates j and k give a certified lower
  // bound on ||v^j - v^k||_inf; every other coordinate differs by at most
  // 2 max_off. An exact scan is only needed when the shortcut is inconclusive.
  constexpr double sep = 1.0 / 3.0;
  constexpr double diam = 5.0 / 3.0;
  auto exact = [&](std::size_t j, std::size_t k) {
    double d = 0.0;
    for (std::size_t i = 0; i < N; ++i) d = std::max(d, std::abs(a(i, j) - a(i, k)));
    return d;
  };
  r.min_separation = N > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = j + 1; k < N; ++k) {
      double lower = std::max(std::abs(a(j, j) - a(j, k)), std::abs(a(k, k) - a(k, j)));
      double upper = std::max({std::abs(a(j, j)) + std::abs(a(j, k)),
                               std::abs(a(k, k)) + std::abs(a(k, j)), 2.0 * max_off});
      if (lower < sep || upper > diam) {
        const double d = exact(j, k);
        lower = d;
        upper = d;
      }
      r.min_separation = std::min(r.min_separation, lower);
      r.max_distance = std::max(r.max_distance, upper);
      if (lower < sep || upper > diam) r.violations.emplace_back(j, k);
    }
  }
  bool separated = true, bounded = true;
  for (const auto& [j, k] : r.violations) {
    const double d = exact(j, k);
    if (d < sep) separated = false;
    if (d > diam) bounded = false;
  }
  r.separated = separated;
  r.diameter_ok = bounded;
  return r;
}

CliqueCheck clique_identity_check(const FactoredMatrix& A, const std::vector<std::size_t>& clique,
                                  double gamma) {
  const std::size_t N = A.n_dim();
  for (std::size_t v : clique) {
    if (v >= N) throw DimensionError("clique_identity_check: vertex " + std::to_string(v) + " out of range");
  }
  const RowMatrix& a = A.dense();
  CliqueCheck c;
  c.allowed_diag_deviation = approx_error(A);
  double worst = -1.0;
  for (std::size_t p = 0; p < clique.size(); ++p) {
    const std::size_t i = clique[p];
    c.max_diag_deviation = std::max(c.max_diag_deviation, std::abs(a(i, i) - 1.0));
    for (std::size_t q = 0; q < clique.size(); ++q) {
      if (p == q) continue;
      const double v = std::abs(a(i, clique[q]));
      if (v > worst) {
        worst = v;
        c.witness = {i, clique[q]};
      }
    }
  }
  c.max_offdiag = std::max(worst, 0.0);
  c.ok = c.max_offdiag <= gamma && c.max_diag_deviation <= c.allowed_diag_deviation;
  return c;
}

}  // namespace lri
