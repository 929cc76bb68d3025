#include <cmath>

#include "lri/error.hpp"
#include "lri/geometry.hpp"

namespace lri {

Subspace rank_factorize(const FactoredMatrix& A, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw ParameterError("rank tolerance must lie in (0, 1)");
  const auto N = A.left().rows();
  const auto n = A.left().cols();

  // A = Q R_L R; the SVD of the small core R_L R gives A's column space.
  Eigen::HouseholderQR<Matrix> qr(A.left());
  const Matrix q = qr.householderQ() * Matrix::Identity(N, n);
  const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const Matrix core = r * A.right();

  Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  Eigen::Index dim = 0;
  if (sigma.size() > 0 && sigma(0) > 0.0) {
    while (dim < sigma.size() && sigma(dim) > tol * sigma(0)) ++dim;
  }

  Subspace sub;
  sub.ambient_dim = static_cast<std::size_t>(N);
  sub.dim = static_cast<std::size_t>(dim);
  sub.basis = q * svd.matrixU().leftCols(dim);
  sub.coords = sigma.head(dim).asDiagonal() * svd.matrixV().leftCols(dim).transpose();
  return sub;
}

Ellipsoid::Ellipsoid(Matrix shape) {
  if (shape.rows() != shape.cols() || shape.rows() < 1) {
    throw ParameterError("ellipsoid shape must be a nonempty square matrix");
  }
  const double scale = shape.cwiseAbs().maxCoeff();
  if ((shape - shape.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) {
    throw ParameterError("ellipsoid shape must be symmetric");
  }
  shape_ = 0.5 * (shape + shape.transpose());
  Eigen::LLT<Matrix> llt(shape_);
  if (llt.info() != Eigen::Success) throw ParameterError("ellipsoid shape must be positive definite");
  chol_ = llt.matrixL();
  for (Eigen::Index i = 0; i < chol_.rows(); ++i) {
    if (!(chol_(i, i) > 0.0)) throw ParameterError("ellipsoid shape must be positive definite");
    log_det_ += 2.0 * std::log(chol_(i, i));
  }
}

double Ellipsoid::norm(const Vector& x) const { return (chol_.transpose() * x).norm(); }

double Ellipsoid::inner(const Vector& a, const Vector& b) const { return a.dot(shape_ * b); }

}  // namespace lri
