#include <algorithm>
#include <cmath>
#include <limits>

#include "lri/error.hpp"
#include "lri/geometry.hpp"

namespace lri {

namespace {

std::size_t column_rank(const Matrix& points) {
  if (points.cols() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(points.transpose());
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-10 * s(0)) ++rank;
  }
  return rank;
}

// Returns the inverse of U = sum lambda_j p_j p_j^T.
Matrix design_inverse(const Matrix& points, const std::vector<double>& lambda) {
  const auto n = points.rows();
  Matrix u = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const double w = lambda[static_cast<std::size_t>(j)];
    if (w > 0.0) u.selfadjointView<Eigen::Lower>().rankUpdate(points.col(j), w);
  }
  u = u.selfadjointView<Eigen::Lower>();
  return u.ldlt().solve(Matrix::Identity(n, n));
}

Vector leverages(const Matrix& points, const Matrix& u_inv) {
  return (points.transpose() * u_inv).cwiseProduct(points.transpose()).rowwise().sum();
}

double john_residual(const Ellipsoid& ell, const Matrix& points, const ContactSet& set) {
  const auto n = static_cast<Eigen::Index>(ell.dim());
  Matrix acc = -Matrix::Identity(n, n);
  const Matrix lt = ell.cholesky().transpose();
  for (std::size_t m = 0; m < set.indices.size(); ++m) {
    const Vector u = lt * points.col(static_cast<Eigen::Index>(set.indices[m]));
    acc.noalias() += set.weights[m] * u * u.transpose();
  }
  return acc.norm();
}

}  // namespace

std::vector<std::size_t> symmetric_representatives(const Matrix& points, double tol) {
  std::vector<std::size_t> keep;
  const double scale = points.size() > 0 ? points.cwiseAbs().maxCoeff() : 0.0;
  const double eps = tol * std::max(scale, 1.0);
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const auto p = points.col(j);
    if (p.cwiseAbs().maxCoeff() <= eps) continue;
    bool duplicate = false;
    for (std::size_t q : keep) {
      const auto other = points.col(static_cast<Eigen::Index>(q));
      if ((p - other).cwiseAbs().maxCoeff() <= eps || (p + other).cwiseAbs().maxCoeff() <= eps) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) keep.push_back(static_cast<std::size_t>(j));
  }
  return keep;
}

MveeResult mvee(const Matrix& points, double tol, const MveeOptions& options) {
  if (!(tol > 0.0 && tol < 0.1)) throw ParameterError("mvee tolerance must lie in (0, 0.1)");
  const auto n = points.rows();
  const auto m = points.cols();
  if (n < 1 || m < 1) throw DimensionError("mvee needs at least one point of positive dimension");
  const std::size_t rank = column_rank(points);
  if (rank < static_cast<std::size_t>(n)) {
    throw DimensionError("points span a " + std::to_string(rank) + "-dimensional subspace of R^" +
                         std::to_string(n));
  }
  const double dim = static_cast<double>(n);
  const auto mu = static_cast<std::size_t>(m);

  std::vector<double> lambda(mu, 1.0 / static_cast<double>(m));
  std::size_t iterations = 0;
  double gap = std::numeric_limits<double>::infinity();

  if (n == 1) {
    // The optimal design sits on the longest point.
    Eigen::Index best = 0;
    points.row(0).cwiseAbs().maxCoeff(&best);
    std::fill(lambda.begin(), lambda.end(), 0.0);
    lambda[static_cast<std::size_t>(best)] = 1.0;
    gap = 0.0;
  } else {
    Matrix u_inv = design_inverse(points, lambda);
    Vector g = leverages(points, u_inv);
    constexpr std::size_t refresh = 1000;
    while (true) {
      Eigen::Index up = 0;
      for (Eigen::Index j = 1; j < m; ++j)
        if (g(j) > g(up)) up = j;
      Eigen::Index down = -1;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (lambda[static_cast<std::size_t>(j)] > 0.0 && (down < 0 || g(j) < g(down))) down = j;
      }
      const double eps_plus = g(up) / dim - 1.0;
      const double eps_minus = 1.0 - g(down) / dim;
      gap = std::max(eps_plus, eps_minus);
      if (gap <= tol) break;
      if (iterations >= options.max_iterations) {
        throw NonconvergenceError("mvee: iteration cap " + std::to_string(options.max_iterations) +
                                      " reached with gap " + std::to_string(gap),
                                  gap);
      }
      ++iterations;

      // U' = a U + b p p^T
      Eigen::Index j;
      double a, b;
      if (eps_plus >= eps_minus) {
        j = up;
        const double gj = g(j);
        const double alpha = (gj - dim) / (dim * (gj - 1.0));
        for (double& l : lambda) l *= 1.0 - alpha;
        lambda[static_cast<std::size_t>(j)] += alpha;
        a = 1.0 - alpha;
        b = alpha;
      } else {
        j = down;
        const double gj = g(j);
        const double lj = lambda[static_cast<std::size_t>(j)];
        const double alpha_max = lj / (1.0 - lj);
        double alpha = alpha_max;
        bool drop = true;
        if (gj > 1.0) {
          const double step = (dim - gj) / (dim * (gj - 1.0));
          if (step < alpha_max) {
            alpha = step;
            drop = false;
          }
        }
        for (double& l : lambda) l *= 1.0 + alpha;
        lambda[static_cast<std::size_t>(j)] = drop ? 0.0 : lambda[static_cast<std::size_t>(j)] - alpha;
        a = 1.0 + alpha;
        b = -alpha;
      }

      if (iterations % refresh == 0) {
        u_inv = design_inverse(points, lambda);
        g = leverages(points, u_inv);
        continue;
      }
      // Sherman-Morrison on U^{-1} and the leverages.
      const Vector w = u_inv * points.col(j);
      const double gj = points.col(j).dot(w);
      const double r = b / a;
      const double denom = 1.0 + r * gj;
      const Vector q = points.transpose() * w;
      u_inv = (u_inv - (r / denom) * w * w.transpose()) / a;
      g = (g - (r / denom) * q.cwiseAbs2()) / a;
    }
  }

  Matrix u_inv = n == 1 ? Matrix() : design_inverse(points, lambda);
  Matrix shape;
  if (n == 1) {
    const double pmax = points.row(0).cwiseAbs().maxCoeff();
    shape = Matrix::Constant(1, 1, 1.0 / (pmax * pmax));
  } else {
    shape = u_inv / dim;
    shape = 0.5 * (shape + shape.transpose());
  }
  const Vector norms_sq = leverages(points, shape);
  const double max_sq = norms_sq.maxCoeff();
  shape /= max_sq;

  MveeResult result{Ellipsoid(shape), {}, lambda, iterations, gap, 0.0};
  const Vector scaled = norms_sq / max_sq;
  result.max_containment = scaled.maxCoeff();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (scaled(j) >= 1.0 - 2.0 * tol) {
      result.contacts.indices.push_back(static_cast<std::size_t>(j));
      result.contacts.signs.push_back(1);
      const double w = dim * lambda[static_cast<std::size_t>(j)];
      result.contacts.weights.push_back(w);
      result.contacts.weight_sum += w;
    }
  }
  result.contacts.residual = john_residual(result.ellipsoid, points, result.contacts);
  return result;
}

Vector nnls_normal(const Matrix& Q, const Vector& b) {
  const auto k = b.size();
  Vector x = Vector::Zero(k);
  if (k == 0) return x;
  std::vector<char> passive(static_cast<std::size_t>(k), 0);
  const double tol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());
  Vector w = b;

  auto solve_passive = [&](Vector& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < k; ++i)
      if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
    const auto p = static_cast<Eigen::Index>(idx.size());
    Matrix qp(p, p);
    Vector bp(p);
    for (Eigen::Index a = 0; a < p; ++a) {
      bp(a) = b(idx[a]);
      for (Eigen::Index c = 0; c < p; ++c) qp(a, c) = Q(idx[a], idx[c]);
    }
    const Vector zp = qp.ldlt().solve(bp);
    z.setZero(k);
    for (Eigen::Index a = 0; a < p; ++a) z(idx[a]) = zp(a);
  };

  for (Eigen::Index outer = 0; outer < 3 * k + 10; ++outer) {
    Eigen::Index enter = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!passive[static_cast<std::size_t>(i)] && w(i) > tol && (enter < 0 || w(i) > w(enter))) {
        enter = i;
      }
    }
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = 1;

    Vector z;
    for (Eigen::Index inner = 0; inner < 3 * k + 10; ++inner) {
      solve_passive(z);
      double alpha = 1.0;
      bool feasible = true;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (passive[static_cast<std::size_t>(i)] && z(i) <= 0.0) {
          feasible = false;
          const double denom = x(i) - z(i);
          if (denom > 0.0) alpha = std::min(alpha, x(i) / denom);
        }
      }
      if (feasible) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Eigen::Index i = 0; i < k; ++i) {
        if (passive[static_cast<std::size_t>(i)] && x(i) <= 1e-15) {
          passive[static_cast<std::size_t>(i)] = 0;
          x(i) = 0.0;
        }
      }
    }
    w = b - Q * x;
  }
  return x;
}

ContactSet contact_points(const Ellipsoid& ell, const Matrix& points, double tol) {
  if (points.rows() != static_cast<Eigen::Index>(ell.dim())) {
    throw DimensionError("contact_points: point dimension does not match the ellipsoid");
  }
  ContactSet set;
  const Matrix lt = ell.cholesky().transpose();
  std::vector<Vector> images;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const Vector u = lt * points.col(j);
    const double r = u.norm();
    if (r < 1.0 - tol || r > 1.0 + tol) continue;
    bool duplicate = false;
    for (const Vector& v : images) {
      if ((u - v).cwiseAbs().maxCoeff() <= 1e-12 || (u + v).cwiseAbs().maxCoeff() <= 1e-12) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    images.push_back(u);
    set.indices.push_back(static_cast<std::size_t>(j));
    set.signs.push_back(1);
  }

  // John condition sum w u u^T = I; <u u^T, v v^T>_F = (u.v)^2.
  const auto k = static_cast<Eigen::Index>(images.size());
  Matrix q(k, k);
  Vector b(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    b(a) = images[static_cast<std::size_t>(a)].squaredNorm();
    for (Eigen::Index c = 0; c < k; ++c) {
      const double d = images[static_cast<std::size_t>(a)].dot(images[static_cast<std::size_t>(c)]);
      q(a, c) = d * d;
    }
  }
  const Vector w = nnls_normal(q, b);
  set.weights.assign(w.data(), w.data() + w.size());
  set.weight_sum = w.sum();
  set.residual = john_residual(ell, points, set);
  return set;
}

}  // namespace lri
