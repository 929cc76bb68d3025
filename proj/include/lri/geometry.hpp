#ifndef LRI_GEOMETRY_HPP
#define LRI_GEOMETRY_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lri/matrices.hpp"

namespace lri {

// Column space of a FactoredMatrix: A = basis * coords with an orthonormal
// N x dim basis.
struct Subspace {
  std::size_t ambient_dim = 0;
  std::size_t dim = 0;
  Matrix basis;   // N x dim
  Matrix coords;  // dim x N, column j holds the coordinates of A's column j
};

Subspace rank_factorize(const FactoredMatrix& A, double tol);

// Centered ellipsoid D = {x : x^T M x <= 1}.
class Ellipsoid {
 public:
  explicit Ellipsoid(Matrix shape);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(shape_.rows()); }
  const Matrix& shape() const noexcept { return shape_; }
  double log_det() const noexcept { return log_det_; }
  // Lower Cholesky factor L with M = L L^T.
  const Matrix& cholesky() const noexcept { return chol_; }

  double norm(const Vector& x) const;
  double inner(const Vector& a, const Vector& b) const;

 private:
  Matrix shape_;
  Matrix chol_;
  double log_det_ = 0.0;
};

struct ContactSet {
  std::vector<std::size_t> indices;  // point (column) indices
  std::vector<int> signs;            // +1 or -1; the contact vector is sign * point
  std::vector<double> weights;       // John decomposition weights
  double weight_sum = 0.0;
  double residual = 0.0;             // || sum w u u^T - I ||_F with u = M^{1/2} p
  std::size_t size() const noexcept { return indices.size(); }
};

struct MveeOptions {
  std::size_t max_iterations = 500000;
};

struct MveeResult {
  Ellipsoid ellipsoid;
  ContactSet contacts;
  std::vector<double> design;  // optimal design weights, one per point, sum 1
  std::size_t iterations = 0;
  double gap = 0.0;            // max(eps_plus, eps_minus) at termination
  double max_containment = 0.0;
};

/// Minimum-volume centered ellipsoid of conv{+-p_j} for the columns p_j of
/// `points` (dim x m). Solves the dual D-optimal design problem with a
/// Frank-Wolfe method with away steps, M = (dim * U)^{-1}, and rescales M so
/// that the largest p^T M p equals one. Contacts are the points with
/// p^T M p >= 1 - 2 tol, weighted by dim times their design weight.
MveeResult mvee(const Matrix& points, double tol, const MveeOptions& options = {});

/// Points with |p|_D in [1 - tol, 1 + tol]; antipodal or repeated points are
/// reported once. Weights solve the John condition by nonnegative least squares.
ContactSet contact_points(const Ellipsoid& ell, const Matrix& points, double tol);

// Columns kept after collapsing exact duplicates and antipodal pairs (and
// dropping zero columns); first occurrence wins.
std::vector<std::size_t> symmetric_representatives(const Matrix& points, double tol = 1e-12);

// Nonnegative least squares in normal-equation form:
// minimize 0.5 x^T Q x - b^T x subject to x >= 0 (Lawson-Hanson active set).
Vector nnls_normal(const Matrix& Q, const Vector& b);

enum class L1Method { exact, sampled };

struct L1Options {
  std::size_t samples = 64;
  std::uint64_t seed = 0x6c31;
};

struct L1Constant {
  double mu = 0.0;          // min over ||t||_1 = 1 of |sum t_m x^m|_D
  double c_hat = 0.0;       // mu * sqrt(dim)
  double mu_lower = 0.0;    // certified lower bound sqrt(lambda_min(G) / k)
  bool certified = false;   // true for the exact method
  std::size_t facets = 0;   // sign-pattern facets covered (up to antipodes)
  std::size_t facets_solved = 0;
  double kkt_residual = 0.0;
  std::vector<int> facet_signs;
  Vector minimizer;         // t achieving mu
};

inline constexpr std::size_t l1_exact_max_k = 20;

/// Smallest D-norm of sum t_m x^m over the unit l1 sphere. `contacts` holds
/// the x^m as columns (dim x k).
///
/// exact: enumerates all 2^(k-1) facets in Gray-code order. The unconstrained
/// facet minimum 1/(s^T G^{-1} s) bounds every facet QP from below, so only
/// facets whose bound beats the incumbent are solved (projected gradient on
/// the simplex, certified by the KKT residual). Requires k <= 20.
///
/// sampled: random facets polished by one-flip ascent; an upper estimate.
L1Constant l1_lower_constant(const Matrix& contacts, const Ellipsoid& ell, L1Method method,
                             const L1Options& options = {});

struct ContactSelection {
  std::vector<std::size_t> indices;  // columns of the input, ascending
  double mu = 0.0;
  bool certified = false;
  double gram_log_det = 0.0;
};

/// Independent subset of size target_k chosen by drop-one greedy on mu.
/// A volume-pivoted independent subset is extracted first.
ContactSelection select_contact_subset(const Matrix& contacts, const Ellipsoid& ell,
                                       std::size_t target_k, const L1Options& options = {});

// Contact vectors plus a D-orthonormal basis of their D-orthogonal complement.
struct Frame {
  Matrix contacts;    // dim x k
  Matrix complement;  // dim x (dim - k)
  Matrix shape;       // inner product used for the complement
  std::size_t k() const noexcept { return static_cast<std::size_t>(contacts.cols()); }
};

Frame complete_frame(const Matrix& subset, const Ellipsoid& ell);

struct Expansion {
  Matrix t;  // k x N
  Matrix s;  // (dim - k) x N, s_l^j = <v^j, y^l>_D
  double max_relative_residual = 0.0;
};

Expansion expand_coefficients(const Matrix& columns, const Frame& frame);

struct AuerbachBasis {
  std::vector<std::size_t> indices;
  std::vector<int> signs;
  double coefficient_bound = 0.0;  // max_j ||t^j||_inf
  double abs_det = 0.0;
  std::size_t swaps = 0;
  Matrix coefficients;             // dim x m, column j expands point j
};

/// Volume-maximizing basis among the columns of `points`: greedy pivoting,
/// then single swaps while some swap multiplies |det| by more than 1 + delta.
/// On return every point has coefficients bounded by 1 + delta.
AuerbachBasis auerbach_basis(const Matrix& points, double delta);

}  // namespace lri

#endif  // LRI_GEOMETRY_HPP
