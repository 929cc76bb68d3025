#ifndef LRI_CLI_HPP
#define LRI_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lri/matrices.hpp"

namespace lri {

// Exit codes of the command-line tool.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_io = 3;
inline constexpr int exit_numerical = 4;

// "theorem:c" -> gamma_threshold(N, n, c); "fixed:g" -> g; "scaled:a" -> a / sqrt(n).
struct GammaRule {
  enum class Kind { theorem, fixed, scaled };
  Kind kind = Kind::theorem;
  double value = 0.25;

  static GammaRule parse(const std::string& text);
  double resolve(std::size_t N, std::size_t n) const;
  std::string str() const;
};

struct SweepSpec {
  std::vector<std::uint64_t> N_values;
  enum class NRule { fixed, log_multiples };
  NRule n_rule = NRule::fixed;
  std::vector<std::uint64_t> n_values;  // the fixed list, or the multiples of ceil(ln N)
  std::vector<std::uint64_t> seeds;
  GammaRule gamma_rule;
  double c = 0.05;                      // constant for theorem_bound
  MatrixKind kind = MatrixKind::random_sign;
  bool trace = false;
  std::string output;                   // empty: standard output
  unsigned threads = 0;                 // 0: hardware concurrency

  /// Parses and validates a JSON document; errors name the offending field.
  static SweepSpec parse(const std::string& json_text);
};

struct SweepRow {
  std::uint64_t N = 0, n = 0, seed = 0;
  double gamma = 0.0, error = 0.0, F_star = 0.0, nnz_fraction = 0.0;
  double theorem_bound = 0.0, probabilistic_bound = 0.0;
  std::optional<bool> trace_final_holds;
};

inline constexpr const char* sweep_csv_header =
    "N,n,seed,gamma,error,F_star,nnz_fraction,theorem_bound,probabilistic_bound,trace_final_holds";

/// One row per (N, n, seed), sorted lexicographically; rows are computed in
/// a worker pool and assembled in order afterwards.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Entry point of the `lri` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lri

#endif  // LRI_CLI_HPP
