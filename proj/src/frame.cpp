#include <algorithm>
#include <cmath>

#include "lri/error.hpp"
#include "lri/geometry.hpp"

namespace lri {

Frame complete_frame(const Matrix& subset, const Ellipsoid& ell) {
  const auto n = static_cast<Eigen::Index>(ell.dim());
  const auto k = subset.cols();
  if (subset.rows() != n) throw DimensionError("complete_frame: subset dimension mismatch");
  if (k > n) throw RankDeficiencyError("complete_frame: more vectors than dimensions");

  const Matrix& chol = ell.cholesky();
  // In coordinates e = L^T x the D inner product is Euclidean.
  const Matrix mapped = chol.transpose() * subset;
  Frame frame;
  frame.contacts = subset;
  frame.shape = ell.shape();
  if (k > 0) {
    Eigen::ColPivHouseholderQR<Matrix> check(mapped);
    check.setThreshold(1e-10);
    if (check.rank() < k) throw RankDeficiencyError("complete_frame: subset is not independent");
  }
  Matrix q = Matrix::Identity(n, n);
  if (k > 0) {
    Eigen::HouseholderQR<Matrix> qr(mapped);
    q = qr.householderQ();
  }
  const Matrix complement = q.rightCols(n - k);
  frame.complement = chol.transpose().triangularView<Eigen::Upper>().solve(complement);
  return frame;
}

Expansion expand_coefficients(const Matrix& columns, const Frame& frame) {
  const auto n = frame.shape.rows();
  if (columns.rows() != n) throw DimensionError("expand_coefficients: column dimension mismatch");
  const Matrix& x = frame.contacts;
  const Matrix& y = frame.complement;
  if (x.cols() + y.cols() != n) throw DimensionError("expand_coefficients: frame does not span");

  Expansion ex;
  const Matrix mc = frame.shape * columns;
  ex.s = y.transpose() * mc;
  if (x.cols() > 0) {
    const Matrix gram = x.transpose() * frame.shape * x;
    ex.t = gram.ldlt().solve(x.transpose() * mc);
  } else {
    ex.t = Matrix::Zero(0, columns.cols());
  }
  const Matrix rebuilt = x * ex.t + y * ex.s;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    const double norm = columns.col(j).norm();
    const double err = (columns.col(j) - rebuilt.col(j)).norm();
    ex.max_relative_residual =
        std::max(ex.max_relative_residual, norm > 0.0 ? err / norm : err);
  }
  return ex;
}

AuerbachBasis auerbach_basis(const Matrix& points, double delta) {
  if (!(delta > 0.0 && delta <= 0.5)) throw ParameterError("delta must lie in (0, 0.5]");
  const auto n = points.rows();
  const auto m = points.cols();
  if (n < 1 || m < n) throw RankDeficiencyError("auerbach_basis: fewer points than dimensions");

  // Greedy volume pivoting: take the point with the largest residual norm.
  Matrix residual = points;
  std::vector<std::size_t> selected;
  const double scale = points.colwise().squaredNorm().maxCoeff();
  for (Eigen::Index step = 0; step < n; ++step) {
    Eigen::Index best = -1;
    double best_norm = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double r = residual.col(j).squaredNorm();
      if (r > best_norm) {
        best_norm = r;
        best = j;
      }
    }
    if (best < 0 || best_norm <= 1e-20 * scale) {
      throw RankDeficiencyError("auerbach_basis: points span fewer than " + std::to_string(n) +
                                " dimensions");
    }
    selected.push_back(static_cast<std::size_t>(best));
    const Vector q = residual.col(best) / std::sqrt(best_norm);
    residual -= q * (q.transpose() * residual);
  }

  AuerbachBasis out;
  Matrix coeffs;
  Eigen::Index basis_cols = n;
  for (std::size_t guard = 0; guard < 100000; ++guard) {
    Matrix basis(n, basis_cols);
    for (Eigen::Index a = 0; a < n; ++a) {
      basis.col(a) = points.col(static_cast<Eigen::Index>(selected[static_cast<std::size_t>(a)]));
    }
    Eigen::PartialPivLU<Matrix> lu(basis);
    coeffs = lu.solve(points);
    out.abs_det = std::abs(lu.determinant());

    Eigen::Index bi = 0, bj = 0;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(coeffs(i, j)) > worst) {
          worst = std::abs(coeffs(i, j));
          bi = i;
          bj = j;
        }
      }
    }
    if (worst <= 1.0 + delta) break;
    // Swapping basis vector bi for point bj scales |det| by |coeffs(bi, bj)|.
    selected[static_cast<std::size_t>(bi)] = static_cast<std::size_t>(bj);
    ++out.swaps;
  }

  Matrix basis(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    basis.col(a) = points.col(static_cast<Eigen::Index>(selected[static_cast<std::size_t>(a)]));
  }
  out.signs.assign(static_cast<std::size_t>(n), 1);
  if (basis.determinant() < 0.0) {
    out.signs[0] = -1;
    coeffs.row(0) *= -1.0;
  }
  out.indices = selected;
  out.coefficients = coeffs;
  out.coefficient_bound = coeffs.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace lri
