#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "lri/error.hpp"
#include "lri/geometry.hpp"
#include "lri/rng.hpp"

namespace lri {

namespace {

// Euclidean projection onto the probability simplex.
Vector project_simplex(const Vector& v) {
  const auto k = v.size();
  std::vector<double> sorted(v.data(), v.data() + k);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    cumulative += sorted[static_cast<std::size_t>(i)];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

double kkt_residual(const Matrix& q, const Vector& u) {
  const Vector grad = 2.0 * q * u;
  const double lambda = u.dot(grad);
  double r = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    r = std::max(r, std::abs(std::min(u(i), grad(i) - lambda)));
  }
  return r / (1.0 + std::abs(lambda));
}

struct FacetSolution {
  double value = 0.0;
  double kkt = 0.0;
  Vector u;
};

// minimize u^T Q u over the simplex by projected gradient with Armijo steps.
FacetSolution solve_facet(const Matrix& q, Vector u) {
  constexpr double kkt_tol = 1e-9;
  constexpr int max_iter = 100000;
  u = project_simplex(u);
  double f = u.dot(q * u);
  double step = 1.0 / std::max(2.0 * q.diagonal().maxCoeff(), 1e-300);
  double kkt = kkt_residual(q, u);
  for (int it = 0; it < max_iter && kkt > kkt_tol; ++it) {
    const Vector grad = 2.0 * q * u;
    double t = step * 2.0;
    Vector next;
    double fn = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      next = project_simplex(u - t * grad);
      fn = next.dot(q * next);
      if (fn <= f + grad.dot(next - u) * 0.5) break;
      t *= 0.5;
    }
    if (fn > f) break;  // no further descent at machine precision
    u = next;
    f = fn;
    step = t;
    kkt = kkt_residual(q, u);
  }
  return {f, kkt, u};
}

struct Quadratic {
  Matrix gram;     // G = X^T M X
  Matrix inverse;  // H = G^{-1}
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool singular = false;
  Vector null_vector;
};

Quadratic analyse(const Matrix& contacts, const Ellipsoid& ell) {
  Quadratic qd;
  qd.gram = contacts.transpose() * ell.shape() * contacts;
  qd.gram = 0.5 * (qd.gram + qd.gram.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(qd.gram);
  qd.lambda_min = std::max(eig.eigenvalues()(0), 0.0);
  qd.lambda_max = eig.eigenvalues().maxCoeff();
  qd.singular = !(qd.lambda_min > 1e-12 * qd.lambda_max);
  if (qd.singular) {
    qd.null_vector = eig.eigenvectors().col(0);
  } else {
    qd.inverse = qd.gram.ldlt().solve(Matrix::Identity(qd.gram.rows(), qd.gram.cols()));
    qd.inverse = 0.5 * (qd.inverse + qd.inverse.transpose());
  }
  return qd;
}

// One-flip best-improvement ascent on s^T H s.
double polish(const Matrix& h, std::vector<int>& s) {
  const auto k = h.rows();
  Vector sv(k);
  for (Eigen::Index i = 0; i < k; ++i) sv(i) = s[static_cast<std::size_t>(i)];
  Vector w = h * sv;
  double val = sv.dot(w);
  while (true) {
    Eigen::Index best = -1;
    double best_gain = 1e-13 * std::abs(val);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double gain = -4.0 * sv(i) * w(i) + 4.0 * h(i, i);
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best < 0) break;
    w -= 2.0 * sv(best) * h.col(best);
    sv(best) = -sv(best);
    val = sv.dot(w);
  }
  for (Eigen::Index i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = static_cast<int>(sv(i));
  if (s[0] < 0) {
    for (int& x : s) x = -x;
  }
  return val;
}

double quad_value(const Matrix& h, const std::vector<int>& s) {
  Vector sv(h.rows());
  for (Eigen::Index i = 0; i < sv.size(); ++i) sv(i) = s[static_cast<std::size_t>(i)];
  return sv.dot(h * sv);
}

void finish_on_facet(const Quadratic& qd, const std::vector<int>& s, L1Constant& out) {
  const auto k = qd.gram.rows();
  Vector sv(k);
  for (Eigen::Index i = 0; i < k; ++i) sv(i) = s[static_cast<std::size_t>(i)];
  const Matrix q = sv.asDiagonal() * qd.gram * sv.asDiagonal();
  const Vector hs = qd.inverse * sv;
  const double val = sv.dot(hs);
  const Vector start = sv.asDiagonal() * hs / val;
  const FacetSolution sol = solve_facet(q, start);
  out.mu = std::sqrt(std::max(sol.value, 0.0));
  out.kkt_residual = sol.kkt;
  out.facet_signs = s;
  out.minimizer = sv.asDiagonal() * sol.u;
}

}  // namespace

L1Constant l1_lower_constant(const Matrix& contacts, const Ellipsoid& ell, L1Method method,
                             const L1Options& options) {
  const auto k = contacts.cols();
  if (k < 1) throw ParameterError("l1_lower_constant needs at least one contact vector");
  if (contacts.rows() != static_cast<Eigen::Index>(ell.dim())) {
    throw DimensionError("l1_lower_constant: contact dimension does not match the ellipsoid");
  }
  if (method == L1Method::exact && static_cast<std::size_t>(k) > l1_exact_max_k) {
    throw SizeError("exact l1 constant supports k <= " + std::to_string(l1_exact_max_k) +
                    ", got k=" + std::to_string(k));
  }
  const double sqrt_dim = std::sqrt(static_cast<double>(ell.dim()));
  const Quadratic qd = analyse(contacts, ell);

  L1Constant out;
  out.certified = method == L1Method::exact;
  out.mu_lower = std::sqrt(qd.lambda_min / static_cast<double>(k));

  if (qd.singular) {
    // A null combination of the contacts: the constant vanishes.
    out.mu = 0.0;
    out.mu_lower = 0.0;
    out.certified = true;
    out.minimizer = qd.null_vector / qd.null_vector.cwiseAbs().sum();
    out.facet_signs.assign(static_cast<std::size_t>(k), 1);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (out.minimizer(i) < 0.0) out.facet_signs[static_cast<std::size_t>(i)] = -1;
    }
    return out;
  }

  const Matrix& h = qd.inverse;
  std::vector<int> best_s(static_cast<std::size_t>(k), 1);

  if (method == L1Method::exact) {
    // Gray-code walk over s in {+-1}^k with s_0 = +1, tracking w = H s.
    std::vector<int> s(static_cast<std::size_t>(k), 1);
    Vector w = h * Vector::Ones(k);
    double val = w.sum();
    double best = val;
    const std::uint64_t count = std::uint64_t{1} << (k - 1);
    for (std::uint64_t g = 1; g < count; ++g) {
      const auto i = static_cast<Eigen::Index>(std::countr_zero(g)) + 1;
      const double si = s[static_cast<std::size_t>(i)];
      val += -4.0 * si * w(i) + 4.0 * h(i, i);
      w -= 2.0 * si * h.col(i);
      s[static_cast<std::size_t>(i)] = -s[static_cast<std::size_t>(i)];
      if ((g & 0xFFFF) == 0) val = quad_value(h, s);
      if (val > best) {
        best = val;
        best_s = s;
      }
    }
    out.facets = static_cast<std::size_t>(count);
    // Every other facet has lower bound 1/(s^T H s) >= 1/best, which is the
    // value attained on best_s; only that facet needs a QP solve.
    out.facets_solved = 1;
  } else {
    SplitMix64 gen(options.seed);
    double best = -1.0;
    auto consider = [&](std::vector<int> s) {
      const double val = polish(h, s);
      if (val > best) {
        best = val;
        best_s = s;
      }
    };
    consider(std::vector<int>(static_cast<std::size_t>(k), 1));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    const Vector top = eig.eigenvectors().col(k - 1);
    std::vector<int> lead(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) lead[static_cast<std::size_t>(i)] = top(i) < 0.0 ? -1 : 1;
    consider(lead);
    for (std::size_t r = 0; r < options.samples; ++r) {
      std::vector<int> s(static_cast<std::size_t>(k));
      for (int& x : s) x = gen.sign();
      consider(s);
    }
    out.facets = options.samples + 2;
    out.facets_solved = 1;
  }

  finish_on_facet(qd, best_s, out);
  out.c_hat = out.mu * sqrt_dim;
  return out;
}

ContactSelection select_contact_subset(const Matrix& contacts, const Ellipsoid& ell,
                                       std::size_t target_k, const L1Options& options) {
  const auto k = contacts.cols();
  if (target_k < 1) throw ParameterError("target_k must be at least 1");
  if (target_k > static_cast<std::size_t>(k)) {
    throw RankDeficiencyError("target_k=" + std::to_string(target_k) + " exceeds the " +
                              std::to_string(k) + " available contacts");
  }

  // Volume pivoting on the D-Gram matrix: repeatedly take the contact with
  // the largest residual after D-orthogonal projection.
  Matrix gram = contacts.transpose() * ell.shape() * contacts;
  Vector residual = gram.diagonal();
  const double scale = std::max(residual.maxCoeff(), 1e-300);
  Matrix factor = Matrix::Zero(k, std::min<Eigen::Index>(k, contacts.rows()));
  std::vector<std::size_t> independent;
  std::vector<char> used(static_cast<std::size_t>(k), 0);
  for (Eigen::Index step = 0; step < factor.cols(); ++step) {
    Eigen::Index pivot = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!used[static_cast<std::size_t>(i)] && (pivot < 0 || residual(i) > residual(pivot))) pivot = i;
    }
    if (pivot < 0 || residual(pivot) <= 1e-12 * scale) break;
    used[static_cast<std::size_t>(pivot)] = 1;
    independent.push_back(static_cast<std::size_t>(pivot));
    const double root = std::sqrt(residual(pivot));
    for (Eigen::Index i = 0; i < k; ++i) {
      double v = gram(i, pivot);
      for (Eigen::Index c = 0; c < step; ++c) v -= factor(i, c) * factor(pivot, c);
      factor(i, step) = v / root;
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      residual(i) -= factor(i, step) * factor(i, step);
    }
  }
  if (independent.size() < target_k) {
    throw RankDeficiencyError("only " + std::to_string(independent.size()) +
                              " independent contacts, target_k=" + std::to_string(target_k));
  }
  std::sort(independent.begin(), independent.end());

  auto submatrix = [&](const std::vector<std::size_t>& idx) {
    Matrix sub(contacts.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) {
      sub.col(static_cast<Eigen::Index>(a)) = contacts.col(static_cast<Eigen::Index>(idx[a]));
    }
    return sub;
  };
  auto measure = [&](const std::vector<std::size_t>& idx) {
    const L1Method method = idx.size() <= l1_exact_max_k ? L1Method::exact : L1Method::sampled;
    return l1_lower_constant(submatrix(idx), ell, method, options);
  };

  std::vector<std::size_t> current = independent;
  while (current.size() > target_k) {
    double best_mu = -1.0;
    std::size_t drop = 0;
    for (std::size_t c = 0; c < current.size(); ++c) {
      std::vector<std::size_t> trial = current;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(c));
      const double mu = measure(trial).mu;
      if (mu > best_mu) {
        best_mu = mu;
        drop = c;
      }
    }
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
  }

  ContactSelection sel;
  sel.indices = current;
  const L1Constant final_mu = measure(current);
  sel.mu = final_mu.mu;
  sel.certified = final_mu.certified;
  const Matrix sub = submatrix(current);
  const Matrix g = sub.transpose() * ell.shape() * sub;
  Eigen::LLT<Matrix> llt(g);
  sel.gram_log_det = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) sel.gram_log_det += 2.0 * std::log(llt.matrixL()(i, i));
  return sel;
}

}  // namespace lri
