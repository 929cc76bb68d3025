#ifndef LRI_MATRICES_HPP
#define LRI_MATRICES_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lri {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Codes are part of the IRLM1 file format; do not renumber.
enum class MatrixKind : std::uint64_t {
  identity = 0,
  random_sign = 1,
  block_sparse = 2,
  explicit_factors = 3,
  submatrix = 4,
};

const char* to_string(MatrixKind kind) noexcept;
MatrixKind matrix_kind_from_string(const std::string& name);
MatrixKind matrix_kind_from_code(std::uint64_t code);

struct Provenance {
  MatrixKind kind = MatrixKind::explicit_factors;
  std::uint64_t seed = 0;
  std::string parameters;  // free-form "key=value;..." description
};

// N x N matrix of rank at most n, stored as left (N x n) times right (n x N).
// Immutable; the dense product is computed on first use and shared by copies.
class FactoredMatrix {
 public:
  FactoredMatrix(Matrix left, Matrix right, Provenance provenance = {});

  std::size_t n_dim() const noexcept { return static_cast<std::size_t>(left_.rows()); }
  std::size_t rank_budget() const noexcept { return static_cast<std::size_t>(left_.cols()); }
  const Matrix& left() const noexcept { return left_; }
  const Matrix& right() const noexcept { return right_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  // Row-major dense product. Each entry is a compensated dot product over the
  // rank index in fixed order, so the result is reproducible bit for bit.
  const RowMatrix& dense() const;
  double operator()(std::size_t i, std::size_t j) const { return dense()(i, j); }

 private:
  struct Cache;
  Matrix left_;
  Matrix right_;
  Provenance provenance_;
  std::shared_ptr<Cache> cache_;
};

// Materialize left * right with compensated summation (see FactoredMatrix::dense).
RowMatrix materialize(const Matrix& left, const Matrix& right);

struct DensityProfile {
  double gamma = 0.0;
  double global_density = 0.0;  // F*_A(gamma)
  std::vector<double> column_densities;
  double nnz_fraction = 0.0;
};

/// A_ij = <x^i, x^j> / n for independent uniform sign vectors x^i in {-1,1}^n.
/// Stored as left = X / n, right = X^T; row i of X comes from stream_key(seed, 1, i).
FactoredMatrix make_random_sign(std::size_t N, std::size_t n, std::uint64_t seed);

/// Exact identity with rank budget N.
FactoredMatrix make_identity(std::size_t N);

enum class BlockGenerator { automatic, identity, random_sign, golay };

const char* to_string(BlockGenerator generator) noexcept;
BlockGenerator block_generator_from_string(const std::string& name);

struct BlockSparseOptions {
  std::size_t block_size = 0;  // 0 selects the smallest feasible block
  BlockGenerator generator = BlockGenerator::automatic;
  double max_block_error = 1.0 / 3.0;
  int max_reseeds = 16;
};

struct BlockPlan {
  std::size_t block_size = 0;
  std::size_t block_count = 0;
  std::size_t rank_per_block = 0;  // rank actually used by a full block
  BlockGenerator generator = BlockGenerator::automatic;
};

// Smallest rank for which a random sign block of the given size reaches
// error 1/3 with probability at least 1/2 (Hoeffding plus union bound).
std::size_t random_sign_rank_floor(std::size_t block_size);

BlockPlan plan_block_sparse(std::size_t N, std::size_t n, const BlockSparseOptions& options = {});

// Fraction of entries inside the diagonal blocks of a plan: an upper bound on
// the nnz fraction of the constructed matrix.
double block_support_fraction(std::size_t N, const BlockPlan& plan);

/// Block-diagonal approximation of the identity. Each diagonal block is built
/// by the generator chosen in plan_block_sparse; entries outside the blocks
/// are exactly zero. Throws ConstructionError when no block plan is feasible.
FactoredMatrix make_block_sparse(std::size_t N, std::size_t n, std::uint64_t seed,
                                 const BlockSparseOptions& options = {});

/// max_ij |A_ij - delta_ij|
double approx_error(const FactoredMatrix& A);

DensityProfile distribution_function(const FactoredMatrix& A, double gamma);
DensityProfile distribution_function(const RowMatrix& dense, double gamma);

std::size_t numerical_rank(const FactoredMatrix& A, double tol);

// Singular values of left * right, descending, computed from the factors.
Vector singular_values(const FactoredMatrix& A);

// Principal submatrix A[idx, idx] as a new FactoredMatrix. The rank budget is
// kept when it fits; otherwise the factors are recompressed to rank |idx|.
FactoredMatrix principal_submatrix(const FactoredMatrix& A, std::span<const std::size_t> idx);

}  // namespace lri

#endif  // LRI_MATRICES_HPP
