#ifndef LRI_IO_HPP
#define LRI_IO_HPP

#include <filesystem>
#include <string>

#include "lri/matrices.hpp"

namespace lri {

// IRLM1 layout: "IRLM0001", then u64 N, u64 n, u64 kind code, u64 seed (all
// little-endian), then the left factor (N x n) and the right factor (n x N)
// as little-endian doubles in row-major order.
inline constexpr char irlm_magic[8] = {'I', 'R', 'L', 'M', '0', '0', '0', '1'};
inline constexpr std::size_t irlm_header_size = 40;

std::string encode_irlm(const FactoredMatrix& A);
FactoredMatrix decode_irlm(const std::string& bytes);

void write_irlm(const std::filesystem::path& path, const FactoredMatrix& A);
FactoredMatrix read_irlm(const std::filesystem::path& path);

}  // namespace lri

#endif  // LRI_IO_HPP
