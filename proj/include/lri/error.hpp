#ifndef LRI_ERROR_HPP
#define LRI_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lri {

enum class ErrorKind {
  parameter,
  construction,
  dimension,
  rank_deficiency,
  nonconvergence,
  size,
  format,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& what) : Error(ErrorKind::parameter, what) {}
};

struct ConstructionError : Error {
  explicit ConstructionError(const std::string& what) : Error(ErrorKind::construction, what) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(ErrorKind::dimension, what) {}
};

struct RankDeficiencyError : Error {
  explicit RankDeficiencyError(const std::string& what) : Error(ErrorKind::rank_deficiency, what) {}
};

struct SizeError : Error {
  explicit SizeError(const std::string& what) : Error(ErrorKind::size, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Iteration cap reached; carries the optimality gap at the last iterate.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, double gap)
      : Error(ErrorKind::nonconvergence, what), gap_(gap) {}
  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

}  // namespace lri

#endif  // LRI_ERROR_HPP
