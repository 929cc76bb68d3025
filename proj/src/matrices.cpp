#include "lri/matrices.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "lri/error.hpp"
#include "lri/golay.hpp"
#include "lri/rng.hpp"

namespace lri {

namespace {

// Error-free transformations (Knuth two-sum, Dekker two-product). Requires
// strict IEEE evaluation; the library is built with -ffp-contract=off.
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double z = s - a;
  e = (a - (s - z)) + (b - z);
}

inline void split(double a, double& hi, double& lo) {
  const double c = 134217729.0 * a;  // 2^27 + 1
  hi = c - (c - a);
  lo = a - hi;
}

inline void two_prod(double a, double b, double& p, double& e) {
  p = a * b;
  double ah, al, bh, bl;
  split(a, ah, al);
  split(b, bh, bl);
  e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
}

constexpr std::uint64_t golay_stream = 5;
constexpr std::size_t golay_length = 24;
constexpr std::size_t golay_capacity = 2048;

std::uint64_t block_seed(std::uint64_t seed, std::size_t block, int attempt) {
  if (block == 0 && attempt == 0) return seed;
  return stream_key(seed, static_cast<std::uint64_t>(MatrixKind::block_sparse),
                    (static_cast<std::uint64_t>(block) << 8) | static_cast<std::uint64_t>(attempt));
}

void check_dimensions(std::size_t N, std::size_t n) {
  if (N < 1) throw ParameterError("matrix size N must be at least 1");
  if (n < 1 || n > N) {
    throw ParameterError("rank budget n=" + std::to_string(n) + " must satisfy 1 <= n <= N=" +
                         std::to_string(N));
  }
}

}  // namespace

const char* to_string(MatrixKind kind) noexcept {
  switch (kind) {
    case MatrixKind::identity: return "identity";
    case MatrixKind::random_sign: return "random_sign";
    case MatrixKind::block_sparse: return "block_sparse";
    case MatrixKind::explicit_factors: return "explicit";
    case MatrixKind::submatrix: return "submatrix";
  }
  return "unknown";
}

MatrixKind matrix_kind_from_string(const std::string& name) {
  if (name == "identity") return MatrixKind::identity;
  if (name == "random_sign") return MatrixKind::random_sign;
  if (name == "block_sparse") return MatrixKind::block_sparse;
  if (name == "explicit") return MatrixKind::explicit_factors;
  if (name == "submatrix") return MatrixKind::submatrix;
  throw ParameterError("unknown matrix kind '" + name + "'");
}

MatrixKind matrix_kind_from_code(std::uint64_t code) {
  if (code > static_cast<std::uint64_t>(MatrixKind::submatrix)) {
    throw FormatError("unknown matrix kind code " + std::to_string(code));
  }
  return static_cast<MatrixKind>(code);
}

const char* to_string(BlockGenerator generator) noexcept {
  switch (generator) {
    case BlockGenerator::automatic: return "auto";
    case BlockGenerator::identity: return "identity";
    case BlockGenerator::random_sign: return "random_sign";
    case BlockGenerator::golay: return "golay";
  }
  return "unknown";
}

BlockGenerator block_generator_from_string(const std::string& name) {
  if (name == "auto") return BlockGenerator::automatic;
  if (name == "identity") return BlockGenerator::identity;
  if (name == "random_sign") return BlockGenerator::random_sign;
  if (name == "golay") return BlockGenerator::golay;
  throw ParameterError("unknown block generator '" + name + "'");
}

// ---------------------------------------------------------------------------
// FactoredMatrix

struct FactoredMatrix::Cache {
  std::once_flag once;
  RowMatrix dense;
};

FactoredMatrix::FactoredMatrix(Matrix left, Matrix right, Provenance provenance)
    : left_(std::move(left)),
      right_(std::move(right)),
      provenance_(std::move(provenance)),
      cache_(std::make_shared<Cache>()) {
  const auto N = left_.rows();
  const auto n = left_.cols();
  if (N < 1) throw ParameterError("factored matrix needs at least one row");
  if (n < 1 || n > N) throw ParameterError("rank budget must satisfy 1 <= n <= N");
  if (right_.rows() != n || right_.cols() != N) {
    throw ParameterError("right factor must be n x N to match the left factor");
  }
}

const RowMatrix& FactoredMatrix::dense() const {
  std::call_once(cache_->once, [this] { cache_->dense = materialize(left_, right_); });
  return cache_->dense;
}

RowMatrix materialize(const Matrix& left, const Matrix& right) {
  const Eigen::Index rows = left.rows();
  const Eigen::Index inner = left.cols();
  const Eigen::Index cols = right.cols();
  const RowMatrix rhs = right;

  std::vector<std::vector<Eigen::Index>> support(static_cast<std::size_t>(inner));
  for (Eigen::Index k = 0; k < inner; ++k) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (rhs(k, j) != 0.0) support[static_cast<std::size_t>(k)].push_back(j);
    }
  }

  RowMatrix out = RowMatrix::Zero(rows, cols);
  std::vector<double> sum(static_cast<std::size_t>(cols), 0.0);
  std::vector<double> comp(static_cast<std::size_t>(cols), 0.0);
  std::vector<char> touched(static_cast<std::size_t>(cols), 0);
  std::vector<Eigen::Index> touched_list;
  touched_list.reserve(static_cast<std::size_t>(cols));

  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < inner; ++k) {
      const double l = left(i, k);
      if (l == 0.0) continue;
      for (Eigen::Index j : support[static_cast<std::size_t>(k)]) {
        const auto ju = static_cast<std::size_t>(j);
        double p, pe, s, se;
        two_prod(l, rhs(k, j), p, pe);
        two_sum(sum[ju], p, s, se);
        sum[ju] = s;
        comp[ju] += pe + se;
        if (!touched[ju]) {
          touched[ju] = 1;
          touched_list.push_back(j);
        }
      }
    }
    for (Eigen::Index j : touched_list) {
      const auto ju = static_cast<std::size_t>(j);
      const double v = sum[ju] + comp[ju];
      out(i, j) = v == 0.0 ? 0.0 : v;
      sum[ju] = comp[ju] = 0.0;
      touched[ju] = 0;
    }
    touched_list.clear();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constructions

FactoredMatrix make_random_sign(std::size_t N, std::size_t n, std::uint64_t seed) {
  check_dimensions(N, n);
  const auto rows = static_cast<Eigen::Index>(N);
  const auto rank = static_cast<Eigen::Index>(n);
  Matrix signs(rows, rank);
  for (Eigen::Index i = 0; i < rows; ++i) {
    SplitMix64 gen(stream_key(seed, static_cast<std::uint64_t>(MatrixKind::random_sign),
                              static_cast<std::uint64_t>(i)));
    for (Eigen::Index k = 0; k < rank; ++k) signs(i, k) = gen.sign();
  }
  Matrix left = signs / static_cast<double>(n);
  Matrix right = signs.transpose();
  return FactoredMatrix(std::move(left), std::move(right),
                        {MatrixKind::random_sign, seed, "n=" + std::to_string(n)});
}

FactoredMatrix make_identity(std::size_t N) {
  if (N < 1) throw ParameterError("matrix size N must be at least 1");
  const auto size = static_cast<Eigen::Index>(N);
  return FactoredMatrix(Matrix::Identity(size, size), Matrix::Identity(size, size),
                        {MatrixKind::identity, 0, ""});
}

std::size_t random_sign_rank_floor(std::size_t block_size) {
  // P(|<x,y>| > r/3) <= 2 exp(-r/18) per pair; require B^2 exp(-r/18) <= 1/2.
  const double b = static_cast<double>(std::max<std::size_t>(block_size, 1));
  return static_cast<std::size_t>(std::ceil(18.0 * std::log(2.0 * b * b)));
}

namespace {

bool generator_fits(BlockGenerator generator, std::size_t block, std::size_t rank,
                    const BlockSparseOptions& options, bool forced) {
  switch (generator) {
    case BlockGenerator::identity:
      return rank >= block;
    case BlockGenerator::random_sign:
      if (rank < 1) return false;
      return forced || rank >= random_sign_rank_floor(block);
    case BlockGenerator::golay:
      return rank >= golay_length && block <= golay_capacity &&
             options.max_block_error >= 1.0 / 3.0;
    case BlockGenerator::automatic:
      break;
  }
  return false;
}

bool choose_generator(std::size_t block, std::size_t rank, const BlockSparseOptions& options,
                      BlockGenerator& chosen) {
  if (options.generator != BlockGenerator::automatic) {
    chosen = options.generator;
    return generator_fits(chosen, block, rank, options, true);
  }
  for (BlockGenerator g :
       {BlockGenerator::identity, BlockGenerator::random_sign, BlockGenerator::golay}) {
    if (generator_fits(g, block, rank, options, false)) {
      chosen = g;
      return true;
    }
  }
  return false;
}

std::size_t rank_used(BlockGenerator generator, std::size_t block, std::size_t rank) {
  switch (generator) {
    case BlockGenerator::identity: return block;
    case BlockGenerator::random_sign: return std::min(rank, block);
    case BlockGenerator::golay: return golay_length;
    case BlockGenerator::automatic: break;
  }
  return 0;
}

std::string infeasible_message(std::size_t N, std::size_t n, std::size_t block, std::size_t rank) {
  std::ostringstream msg;
  msg << "block_sparse sizing infeasible for N=" << N << ", n=" << n << ": per-block rank "
      << rank << " with block size " << block << " admits no generator (identity needs rank >= "
      << block << ", random_sign needs rank >= " << random_sign_rank_floor(block)
      << ", golay needs rank >= " << golay_length << " and block size <= " << golay_capacity
      << ")";
  return msg.str();
}

}  // namespace

BlockPlan plan_block_sparse(std::size_t N, std::size_t n, const BlockSparseOptions& options) {
  check_dimensions(N, n);
  auto make_plan = [&](std::size_t block, BlockPlan& plan) {
    const std::size_t count = (N + block - 1) / block;
    const std::size_t rank = n / count;
    BlockGenerator g{};
    if (!choose_generator(block, rank, options, g)) return false;
    plan = {block, count, rank_used(g, block, rank), g};
    return true;
  };

  BlockPlan plan;
  if (options.block_size != 0) {
    const std::size_t block = std::min(options.block_size, N);
    if (!make_plan(block, plan)) {
      throw ConstructionError(infeasible_message(N, n, block, n / ((N + block - 1) / block)));
    }
    return plan;
  }
  for (std::size_t target = std::min(N, n); target >= 1; --target) {
    const std::size_t block = (N + target - 1) / target;
    if (make_plan(block, plan)) return plan;
  }
  throw ConstructionError(infeasible_message(N, n, N, n));
}

namespace {

void place_block(Matrix& left, Matrix& right, Eigen::Index row0, Eigen::Index col0,
                 const Matrix& block_left, const Matrix& block_right) {
  left.block(row0, col0, block_left.rows(), block_left.cols()) = block_left;
  right.block(col0, row0, block_right.rows(), block_right.cols()) = block_right;
}

Matrix golay_block(std::size_t size, std::uint64_t seed) {
  static const std::vector<std::uint32_t> words = golay_half_code();
  SplitMix64 gen(stream_key(seed, golay_stream, 0));
  std::vector<std::uint32_t> pool = words;
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(gen.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> flips(golay_length);
  for (auto& f : flips) f = gen.sign();

  Matrix signs(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(golay_length));
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t c = 0; c < golay_length; ++c) {
      const int bit = static_cast<int>((pool[i] >> c) & 1U);
      signs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          (bit ? -1.0 : 1.0) * flips[c];
    }
  }
  return signs;
}

}  // namespace

double block_support_fraction(std::size_t N, const BlockPlan& plan) {
  if (N == 0) return 0.0;
  double inside = 0.0;
  for (std::size_t b = 0; b < plan.block_count; ++b) {
    const std::size_t first = b * plan.block_size;
    const auto size = static_cast<double>(std::min(plan.block_size, N - first));
    inside += size * size;
  }
  const auto Nd = static_cast<double>(N);
  return inside / (Nd * Nd);
}

FactoredMatrix make_block_sparse(std::size_t N, std::size_t n, std::uint64_t seed,
                                 const BlockSparseOptions& options) {
  const BlockPlan plan = plan_block_sparse(N, n, options);
  const auto rows = static_cast<Eigen::Index>(N);
  Matrix left = Matrix::Zero(rows, static_cast<Eigen::Index>(n));
  Matrix right = Matrix::Zero(static_cast<Eigen::Index>(n), rows);

  Eigen::Index col = 0;
  for (std::size_t b = 0; b < plan.block_count; ++b) {
    const std::size_t first = b * plan.block_size;
    const std::size_t size = std::min(plan.block_size, N - first);
    const auto row0 = static_cast<Eigen::Index>(first);
    const auto bsize = static_cast<Eigen::Index>(size);

    switch (plan.generator) {
      case BlockGenerator::identity: {
        place_block(left, right, row0, col, Matrix::Identity(bsize, bsize),
                    Matrix::Identity(bsize, bsize));
        col += bsize;
        break;
      }
      case BlockGenerator::random_sign: {
        const std::size_t rank = std::min(plan.rank_per_block, size);
        bool accepted = false;
        for (int attempt = 0; attempt <= options.max_reseeds && !accepted; ++attempt) {
          FactoredMatrix candidate = make_random_sign(size, rank, block_seed(seed, b, attempt));
          if (approx_error(candidate) <= options.max_block_error) {
            place_block(left, right, row0, col, candidate.left(), candidate.right());
            accepted = true;
          }
        }
        if (!accepted) {
          throw ConstructionError("block " + std::to_string(b) + " of size " +
                                  std::to_string(size) + " exceeded error " +
                                  std::to_string(options.max_block_error) + " after " +
                                  std::to_string(options.max_reseeds) + " reseeds");
        }
        col += static_cast<Eigen::Index>(rank);
        break;
      }
      case BlockGenerator::golay: {
        const Matrix signs = golay_block(size, block_seed(seed, b, 0));
        place_block(left, right, row0, col, signs / static_cast<double>(golay_length),
                    signs.transpose());
        col += static_cast<Eigen::Index>(golay_length);
        break;
      }
      case BlockGenerator::automatic:
        break;
    }
  }

  std::ostringstream params;
  params << "block_size=" << plan.block_size << ";blocks=" << plan.block_count
         << ";rank_per_block=" << plan.rank_per_block << ";generator=" << to_string(plan.generator);
  return FactoredMatrix(std::move(left), std::move(right),
                        {MatrixKind::block_sparse, seed, params.str()});
}

// ---------------------------------------------------------------------------
// Metrics

double approx_error(const FactoredMatrix& A) {
  const RowMatrix& d = A.dense();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double dev = std::abs(d(i, j) - (i == j ? 1.0 : 0.0));
      worst = std::max(worst, dev);
    }
  }
  return worst;
}

DensityProfile distribution_function(const RowMatrix& d, double gamma) {
  if (!(gamma >= 0.0)) throw ParameterError("gamma must be nonnegative");
  const auto N = static_cast<std::size_t>(d.rows());
  DensityProfile profile;
  profile.gamma = gamma;
  profile.column_densities.assign(N, 0.0);
  std::vector<std::size_t> column_counts(N, 0);
  std::size_t large = 0;
  std::size_t nonzero = 0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double a = std::abs(d(i, j));
      if (a > gamma) {
        ++large;
        ++column_counts[static_cast<std::size_t>(j)];
      }
      if (a != 0.0) ++nonzero;
    }
  }
  const double total = static_cast<double>(N) * static_cast<double>(N);
  profile.global_density = static_cast<double>(large) / total;
  profile.nnz_fraction = static_cast<double>(nonzero) / total;
  for (std::size_t j = 0; j < N; ++j) {
    profile.column_densities[j] = static_cast<double>(column_counts[j]) / static_cast<double>(N);
  }
  return profile;
}

DensityProfile distribution_function(const FactoredMatrix& A, double gamma) {
  return distribution_function(A.dense(), gamma);
}

Vector singular_values(const FactoredMatrix& A) {
  Eigen::HouseholderQR<Matrix> qr(A.left());
  const auto n = A.left().cols();
  const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const Matrix core = r * A.right();
  Eigen::BDCSVD<Matrix> svd(core.transpose());
  return svd.singularValues();
}

std::size_t numerical_rank(const FactoredMatrix& A, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw ParameterError("rank tolerance must lie in (0, 1)");
  const Vector s = singular_values(A);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) ++rank;
  }
  return rank;
}

FactoredMatrix principal_submatrix(const FactoredMatrix& A, std::span<const std::size_t> idx) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  if (m < 1) throw ParameterError("principal submatrix needs at least one index");
  const auto n = static_cast<Eigen::Index>(A.rank_budget());
  for (std::size_t i : idx) {
    if (i >= A.n_dim()) throw ParameterError("submatrix index out of range");
  }
  Matrix left(m, n);
  Matrix right(n, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto src = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]);
    left.row(a) = A.left().row(src);
    right.col(a) = A.right().col(src);
  }
  Provenance prov{MatrixKind::submatrix, A.provenance().seed,
                  std::string("parent=") + to_string(A.provenance().kind) +
                      ";size=" + std::to_string(m)};
  if (n <= m) return FactoredMatrix(std::move(left), std::move(right), std::move(prov));
  RowMatrix product = materialize(left, right);
  return FactoredMatrix(Matrix::Identity(m, m), Matrix(product), std::move(prov));
}

}  // namespace lri
