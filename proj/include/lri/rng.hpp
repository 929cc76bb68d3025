#ifndef LRI_RNG_HPP
#define LRI_RNG_HPP

#include <cstdint>

namespace lri {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Key of the independent stream used for item `index` of a construction.
// Every random matrix row is drawn from its own stream, so results do not
// depend on evaluation order or thread schedule.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t kind,
                                   std::uint64_t index) noexcept {
  return mix64(mix64(mix64(seed) ^ kind) ^ index);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // +1 or -1 from the high bit.
  constexpr int sign() noexcept { return (next() >> 63) != 0 ? -1 : 1; }

  // Uniform in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound); modulo reduction, bias is below 2^-40 for
  // the bounds used here.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

  double normal() noexcept;

 private:
  std::uint64_t state_;
};

}  // namespace lri

#endif  // LRI_RNG_HPP
