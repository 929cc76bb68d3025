#include "lri/golay.hpp"

#include <bit>

namespace lri {

std::vector<std::uint32_t> extended_golay_code() {
  constexpr std::uint32_t generator = 0xC75;  // bits 0,2,4,5,6,10,11
  std::vector<std::uint32_t> words;
  words.reserve(4096);
  for (std::uint32_t message = 0; message < 4096; ++message) {
    std::uint32_t word = 0;
    for (int b = 0; b < 12; ++b) {
      if ((message >> b) & 1U) word ^= generator << b;
    }
    if (std::popcount(word) & 1) word |= 1U << 23;
    words.push_back(word);
  }
  return words;
}

std::vector<std::uint32_t> golay_half_code() {
  std::vector<std::uint32_t> half;
  half.reserve(2048);
  for (std::uint32_t word : extended_golay_code()) {
    if ((word & 1U) == 0) half.push_back(word);
  }
  return half;
}

}  // namespace lri
