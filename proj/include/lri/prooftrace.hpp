#ifndef LRI_PROOFTRACE_HPP
#define LRI_PROOFTRACE_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lri/geometry.hpp"
#include "lri/matrices.hpp"

namespace lri {

enum class EpsRule { paper, manual };
enum class BasisMode { lemmaA, lemmaB };

const char* to_string(EpsRule rule) noexcept;
const char* to_string(BasisMode mode) noexcept;
EpsRule eps_rule_from_string(const std::string& name);
BasisMode basis_mode_from_string(const std::string& name);

struct TraceConfig {
  double gamma = 0.0;
  double C = 1.0;    // net-counting constant
  double C1 = 1.0;   // final-inequality constant
  double mvee_tol = 1e-6;
  EpsRule eps_rule = EpsRule::paper;
  std::optional<double> manual_eps;
  BasisMode basis = BasisMode::lemmaA;
  double auerbach_delta = 0.01;
  double rank_tol = 1e-10;
  L1Options l1{};

  void validate() const;  // throws ParameterError
};

struct Inequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::string relation = "<=";  // holds == (lhs <= rhs) or (lhs >= rhs)
};

using NamedValues = std::vector<std::pair<std::string, double>>;

struct TraceStep {
  std::string name;
  std::string status;  // ok | failed | skipped | aborted
  NamedValues inputs;
  NamedValues outputs;
  std::optional<Inequality> check;
  std::string notes;
};

struct MeasuredConstants {
  double c0_hat = 0.0;  // mu sqrt(n) / eps
  double mu = 0.0;
  double mu_lower = 0.0;
  double kappa = 0.0;
  double m = 0.0;
  double k = 0.0;
  double eps = 0.0;
  double net_lhs = 0.0;
  double net_rhs = 0.0;
  double final_lhs = 0.0;
  double final_rhs = 0.0;
  double n_over_lnN = 0.0;
};

struct TraceReport {
  std::size_t N = 0;
  std::size_t n = 0;
  bool premise_ok = false;
  bool completed = false;  // false when a structural error aborted the replay
  BasisMode basis_mode = BasisMode::lemmaA;
  std::string branch;      // "direct" or "reconstructed"
  TraceConfig config;
  std::vector<TraceStep> steps;
  MeasuredConstants measured;
  std::string abort_step;
  std::string abort_kind;
  std::string abort_message;

  const TraceStep* find(const std::string& name) const;
};

// Canonical order of the step names.
const std::vector<std::string>& trace_step_names();

struct HalvingResult {
  std::vector<std::size_t> kept;     // ascending
  std::vector<std::size_t> removed;  // ascending
  double F_star = 0.0;               // of the input
  double kept_F_star = 0.0;          // of the kept principal submatrix
  double kappa = 0.0;                // max column density of the kept submatrix
  std::size_t kappa_count = 0;       // kappa * |kept|
};

/// Single pass: drop the columns (and same-indexed rows) whose density
/// exceeds twice the global density, then measure kappa on what is left.
HalvingResult halve_by_density(const FactoredMatrix& A, double gamma);

/// min(1/2, ln(N/2) / (2 C n))
double epsilon_choice(double N, double n, double C);

struct Split {
  Vector w;
  Vector z;
};

/// w keeps the entries with |x_i| > gamma, z = x - w.
Split large_small_split(const Vector& x, double gamma);

struct NetInequality {
  double log_lhs = 0.0;
  double lhs = 0.0;  // may be +inf; the comparison is made in log space
  double rhs = 0.0;
  bool holds = false;
};

/// (e n / m)^m exp(C (m + n eps)) >= N_effective, with (e n / m)^m = 1 at m = 0.
NetInequality net_inequality(double N_effective, double n, double m, double eps, double C);

/// kappa ln(2 C1 / kappa) >= ln(N/2) / (4 n); kappa = 0 gives lhs = 0.
Inequality final_density_inequality(double kappa, double N, double n, double C1);

/// Replays the density argument on A. Failed inequalities are recorded, not
/// thrown; structural failures (rank deficiency, solver nonconvergence) end
/// the replay with the failing step marked "aborted".
TraceReport trace(const FactoredMatrix& A, const TraceConfig& config);

/// Canonical JSON: fixed key order, %.17g numbers, "-0" written as 0,
/// non-finite numbers as the strings "inf", "-inf", "nan".
std::string to_json(const TraceReport& report);

}  // namespace lri

#endif  // LRI_PROOFTRACE_HPP
