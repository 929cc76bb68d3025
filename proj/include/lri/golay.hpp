#ifndef LRI_GOLAY_HPP
#define LRI_GOLAY_HPP

#include <cstdint>
#include <vector>

namespace lri {

// The 4096 codewords of the extended binary Golay code [24, 12, 8], bit b of a
// word is coordinate b. Generated from g(x) = 1 + x^2 + x^4 + x^5 + x^6 + x^10 + x^11
// on the cyclic [23, 12, 7] code plus an overall parity bit.
std::vector<std::uint32_t> extended_golay_code();

// One codeword from each complementary pair (those with bit 0 clear). Any two
// distinct words are at Hamming distance 8, 12 or 16, so the +-1 vectors have
// pairwise inner products in {-8, 0, 8} out of 24.
std::vector<std::uint32_t> golay_half_code();

}  // namespace lri

#endif  // LRI_GOLAY_HPP
