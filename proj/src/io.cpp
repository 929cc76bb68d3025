#include "lri/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "lri/error.hpp"

namespace lri {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  }
  return v;
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

double get_f64(const std::string& in, std::size_t offset) {
  return std::bit_cast<double>(get_u64(in, offset));
}

}  // namespace

std::string encode_irlm(const FactoredMatrix& A) {
  const auto N = static_cast<std::uint64_t>(A.n_dim());
  const auto n = static_cast<std::uint64_t>(A.rank_budget());
  std::string out;
  out.reserve(irlm_header_size + 16 * N * n);
  out.append(irlm_magic, sizeof irlm_magic);
  put_u64(out, N);
  put_u64(out, n);
  put_u64(out, static_cast<std::uint64_t>(A.provenance().kind));
  put_u64(out, A.provenance().seed);
  for (Eigen::Index i = 0; i < A.left().rows(); ++i)
    for (Eigen::Index k = 0; k < A.left().cols(); ++k) put_f64(out, A.left()(i, k));
  for (Eigen::Index k = 0; k < A.right().rows(); ++k)
    for (Eigen::Index j = 0; j < A.right().cols(); ++j) put_f64(out, A.right()(k, j));
  return out;
}

FactoredMatrix decode_irlm(const std::string& bytes) {
  if (bytes.size() < irlm_header_size) throw FormatError("IRLM1: truncated header");
  if (std::memcmp(bytes.data(), irlm_magic, sizeof irlm_magic) != 0) {
    throw FormatError("IRLM1: bad magic");
  }
  const std::uint64_t N = get_u64(bytes, 8);
  const std::uint64_t n = get_u64(bytes, 16);
  const MatrixKind kind = matrix_kind_from_code(get_u64(bytes, 24));
  const std::uint64_t seed = get_u64(bytes, 32);
  if (N < 1 || n < 1 || n > N) throw FormatError("IRLM1: invalid dimensions");
  // 2 * N * n * 8 must not overflow
  if (N > std::numeric_limits<std::uint64_t>::max() / 16 / n) {
    throw FormatError("IRLM1: dimensions overflow");
  }
  const std::uint64_t payload = 16 * N * n;
  if (bytes.size() - irlm_header_size < payload) throw FormatError("IRLM1: truncated payload");
  if (bytes.size() - irlm_header_size > payload) throw FormatError("IRLM1: trailing bytes");

  const auto rows = static_cast<Eigen::Index>(N);
  const auto rank = static_cast<Eigen::Index>(n);
  Matrix left(rows, rank);
  Matrix right(rank, rows);
  std::size_t offset = irlm_header_size;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < rank; ++k, offset += 8) left(i, k) = get_f64(bytes, offset);
  for (Eigen::Index k = 0; k < rank; ++k)
    for (Eigen::Index j = 0; j < rows; ++j, offset += 8) right(k, j) = get_f64(bytes, offset);
  return FactoredMatrix(std::move(left), std::move(right), {kind, seed, ""});
}

void write_irlm(const std::filesystem::path& path, const FactoredMatrix& A) {
  const std::string bytes = encode_irlm(A);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

FactoredMatrix read_irlm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_irlm(bytes);
}

}  // namespace lri
