#include "lri/error.hpp"

#include <cmath>
#include <numbers>

#include "lri/rng.hpp"

namespace lri {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::construction: return "construction";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::rank_deficiency: return "rank_deficiency";
    case ErrorKind::nonconvergence: return "nonconvergence";
    case ErrorKind::size: return "size";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

double SplitMix64::normal() noexcept {
  // Box-Muller, first variate only.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace lri
