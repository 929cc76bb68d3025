#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "CLI11.hpp"
#include "json.hpp"
#include "lri/bounds.hpp"
#include "lri/canonical_json.hpp"
#include "lri/cli.hpp"
#include "lri/error.hpp"
#include "lri/geometry.hpp"
#include "lri/io.hpp"
#include "lri/prooftrace.hpp"

namespace lri {

using nlohmann::ordered_json;

namespace {

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw ParameterError(what + ": '" + text + "' is not a finite number");
  }
  return v;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::format:
    case ErrorKind::io:
      return exit_io;
    case ErrorKind::nonconvergence:
    case ErrorKind::rank_deficiency:
    case ErrorKind::dimension:
      return exit_numerical;
    default:
      return exit_usage;
  }
}

}  // namespace

GammaRule GammaRule::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ParameterError("gamma rule '" + text + "' must look like theorem:c, fixed:g or scaled:a");
  }
  const std::string name = text.substr(0, colon);
  GammaRule r;
  r.value = parse_number(text.substr(colon + 1), "gamma rule value");
  if (name == "theorem") {
    r.kind = Kind::theorem;
  } else if (name == "fixed") {
    r.kind = Kind::fixed;
  } else if (name == "scaled") {
    r.kind = Kind::scaled;
  } else {
    throw ParameterError("unknown gamma rule '" + name + "' (expected theorem, fixed or scaled)");
  }
  if (r.kind == Kind::fixed ? !(r.value >= 0.0) : !(r.value > 0.0)) {
    throw ParameterError("gamma rule '" + text + "': value out of range");
  }
  return r;
}

double GammaRule::resolve(std::size_t N, std::size_t n) const {
  switch (kind) {
    case Kind::theorem:
      return gamma_threshold(static_cast<double>(N), static_cast<double>(n), value);
    case Kind::fixed:
      return value;
    case Kind::scaled:
      if (n < 1) throw ParameterError("scaled gamma rule needs n >= 1");
      return value / std::sqrt(static_cast<double>(n));
  }
  return value;
}

std::string GammaRule::str() const {
  const char* name = kind == Kind::theorem ? "theorem" : kind == Kind::fixed ? "fixed" : "scaled";
  return std::string(name) + ":" + csv_number(value);
}

SweepSpec SweepSpec::parse(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("sweep spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParameterError("sweep spec: top level must be an object");

  static const std::vector<std::string> known = {"N_values", "n_rule", "seeds", "gamma_rule", "c",
                                                 "kind",     "trace",  "output", "threads"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParameterError("sweep spec: unknown field '" + key + "'");
    }
  }
  auto uint_list = [&](const nlohmann::json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) throw ParameterError("sweep spec: '" + field + "' must be a nonempty array");
    std::vector<std::uint64_t> out;
    for (const auto& x : v) {
      if (!x.is_number_unsigned()) {
        throw ParameterError("sweep spec: '" + field + "' entries must be nonnegative integers");
      }
      out.push_back(x.get<std::uint64_t>());
    }
    return out;
  };
  auto require = [&](const std::string& field) -> const nlohmann::json& {
    if (!doc.contains(field)) throw ParameterError("sweep spec: missing field '" + field + "'");
    return doc.at(field);
  };

  SweepSpec spec;
  spec.N_values = uint_list(require("N_values"), "N_values");
  for (std::uint64_t N : spec.N_values) {
    if (N < 3) throw ParameterError("sweep spec: 'N_values' entries must be >= 3");
  }
  const auto& rule = require("n_rule");
  if (!rule.is_object() || rule.size() != 1) {
    throw ParameterError("sweep spec: 'n_rule' must be {\"fixed\": [...]} or {\"log_multiples\": [...]}");
  }
  if (rule.contains("fixed")) {
    spec.n_rule = NRule::fixed;
    spec.n_values = uint_list(rule.at("fixed"), "n_rule.fixed");
  } else if (rule.contains("log_multiples")) {
    spec.n_rule = NRule::log_multiples;
    spec.n_values = uint_list(rule.at("log_multiples"), "n_rule.log_multiples");
  } else {
    throw ParameterError("sweep spec: 'n_rule' must have key 'fixed' or 'log_multiples'");
  }
  for (std::uint64_t v : spec.n_values) {
    if (v < 1) throw ParameterError("sweep spec: 'n_rule' entries must be >= 1");
  }
  spec.seeds = uint_list(require("seeds"), "seeds");
  const auto& g = require("gamma_rule");
  if (!g.is_string()) throw ParameterError("sweep spec: 'gamma_rule' must be a string");
  try {
    spec.gamma_rule = GammaRule::parse(g.get<std::string>());
  } catch (const ParameterError& e) {
    throw ParameterError(std::string("sweep spec: 'gamma_rule': ") + e.what());
  }
  if (doc.contains("c")) {
    if (!doc["c"].is_number() || !(doc["c"].get<double>() > 0.0)) {
      throw ParameterError("sweep spec: 'c' must be a positive number");
    }
    spec.c = doc["c"].get<double>();
  }
  if (doc.contains("kind")) {
    if (!doc["kind"].is_string()) throw ParameterError("sweep spec: 'kind' must be a string");
    spec.kind = matrix_kind_from_string(doc["kind"].get<std::string>());
    if (spec.kind != MatrixKind::random_sign && spec.kind != MatrixKind::block_sparse) {
      throw ParameterError("sweep spec: 'kind' must be random_sign or block_sparse");
    }
  }
  if (doc.contains("trace")) {
    if (!doc["trace"].is_boolean()) throw ParameterError("sweep spec: 'trace' must be a boolean");
    spec.trace = doc["trace"].get<bool>();
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) throw ParameterError("sweep spec: 'output' must be a string");
    spec.output = doc["output"].get<std::string>();
  }
  if (doc.contains("threads")) {
    if (!doc["threads"].is_number_unsigned()) throw ParameterError("sweep spec: 'threads' must be a nonnegative integer");
    spec.threads = doc["threads"].get<unsigned>();
  }
  // Every (N, n) pair must be constructible.
  for (std::uint64_t N : spec.N_values) {
    for (std::uint64_t v : spec.n_values) {
      const std::uint64_t n =
          spec.n_rule == NRule::fixed ? v : v * static_cast<std::uint64_t>(std::ceil(std::log(static_cast<double>(N))));
      if (n < 1 || n > N) {
        throw ParameterError("sweep spec: 'n_rule' gives n=" + std::to_string(n) + " outside [1, N] for N=" +
                             std::to_string(N));
      }
    }
  }
  return spec;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  std::vector<SweepRow> rows;
  for (std::uint64_t N : spec.N_values) {
    for (std::uint64_t v : spec.n_values) {
      const std::uint64_t n = spec.n_rule == SweepSpec::NRule::fixed
                                  ? v
                                  : v * static_cast<std::uint64_t>(std::ceil(std::log(static_cast<double>(N))));
      for (std::uint64_t seed : spec.seeds) {
        SweepRow r;
        r.N = N;
        r.n = n;
        r.seed = seed;
        rows.push_back(r);
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.N, a.n, a.seed) < std::tie(b.N, b.n, b.seed);
  });

  auto work = [&](SweepRow& r) {
    const FactoredMatrix A = spec.kind == MatrixKind::block_sparse ? make_block_sparse(r.N, r.n, r.seed)
                                                                   : make_random_sign(r.N, r.n, r.seed);
    const auto Nd = static_cast<double>(r.N);
    const auto nd = static_cast<double>(r.n);
    r.gamma = spec.gamma_rule.resolve(r.N, r.n);
    r.error = approx_error(A);
    const DensityProfile p = distribution_function(A, r.gamma);
    r.F_star = p.global_density;
    r.nnz_fraction = p.nnz_fraction;
    r.theorem_bound = theorem_density_bound(Nd, nd, spec.c);
    r.probabilistic_bound = probabilistic_upper_bound(Nd, nd);
    if (spec.trace) {
      TraceConfig cfg;
      cfg.gamma = r.gamma;
      const TraceReport rep = trace(A, cfg);
      if (rep.completed) r.trace_final_holds = rep.find("final_density_inequality")->check->holds;
    }
  };

  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, rows.size()));
  std::vector<std::exception_ptr> failures(rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        work(rows[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(sweep_csv_header) + "\n";
  for (const SweepRow& r : rows) {
    out += std::to_string(r.N) + "," + std::to_string(r.n) + "," + std::to_string(r.seed) + "," +
           csv_number(r.gamma) + "," + csv_number(r.error) + "," + csv_number(r.F_star) + "," +
           csv_number(r.nnz_fraction) + "," + csv_number(r.theorem_bound) + "," +
           csv_number(r.probabilistic_bound) + "," +
           (r.trace_final_holds ? (*r.trace_final_holds ? "true" : "false") : "") + "\n";
  }
  return out;
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw IoError("write to '" + path + "' failed");
}

ordered_json bounds_json(const BoundSummary& b) {
  ordered_json o;
  o["probabilistic_upper"] = b.probabilistic_upper;
  o["volume_rank_lower"] = b.volume_rank_lower;
  o["theorem_density_lower"] = b.theorem_density_lower;
  o["gamma_threshold"] = b.gamma_threshold;
  return o;
}

std::vector<std::size_t> to_columns(const std::vector<std::size_t>& reps, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> cols;
  for (std::size_t i : idx) cols.push_back(reps[i]);
  return cols;
}

Matrix representative_points(const Subspace& space, std::vector<std::size_t>& reps) {
  reps = symmetric_representatives(space.coords);
  Matrix pts(space.coords.rows(), static_cast<Eigen::Index>(reps.size()));
  for (std::size_t c = 0; c < reps.size(); ++c) {
    pts.col(static_cast<Eigen::Index>(c)) = space.coords.col(static_cast<Eigen::Index>(reps[c]));
  }
  return pts;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank approximations of the identity: constructions, bounds and proof replay", "lri"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Construct a matrix and write it in IRLM1 format");
  std::string kind_name, out_path, generator = "auto";
  std::size_t N = 0, n = 0, block_size = 0;
  std::uint64_t seed = 0;
  gen->add_option("--kind", kind_name, "identity | random_sign | block_sparse")->required();
  gen->add_option("--N", N, "matrix size")->required();
  gen->add_option("--n", n, "rank budget (ignored for identity)");
  gen->add_option("--seed", seed, "64-bit seed");
  gen->add_option("--out", out_path, "output path")->required();
  gen->add_option("--block-size", block_size, "block_sparse: force the block size");
  gen->add_option("--generator", generator, "block_sparse: auto | identity | random_sign | golay");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Empirical density next to the closed-form bounds");
  std::string matrix_path, gamma_text = "theorem:1";
  std::optional<double> c_opt;
  ana->add_option("--matrix", matrix_path, "IRLM1 file")->required();
  ana->add_option("--gamma", gamma_text, "theorem:c | fixed:g | scaled:a");
  ana->add_option("--c", c_opt, "constant of the density bound (default: the theorem rule's c, else 1)");

  // trace
  auto* trc = app.add_subcommand("trace", "Replay the density argument and print the report");
  TraceConfig tcfg;
  std::string eps_name = "paper", basis_name = "lemmaA", report_path;
  std::optional<double> manual_eps;
  trc->add_option("--matrix", matrix_path, "IRLM1 file")->required();
  trc->add_option("--gamma", gamma_text, "theorem:c | fixed:g | scaled:a");
  trc->add_option("--C", tcfg.C, "net-counting constant");
  trc->add_option("--C1", tcfg.C1, "final-inequality constant");
  trc->add_option("--mvee-tol", tcfg.mvee_tol, "MVEE tolerance");
  trc->add_option("--eps", eps_name, "paper | manual");
  trc->add_option("--manual-eps", manual_eps, "epsilon for --eps manual");
  trc->add_option("--basis", basis_name, "lemmaA | lemmaB");
  trc->add_option("--delta", tcfg.auerbach_delta, "Auerbach swap threshold (lemmaB)");
  trc->add_option("--out", report_path, "also write the report here");

  // sweep
  auto* swp = app.add_subcommand("sweep", "Run an (N, n, seed) sweep from a JSON spec and emit CSV");
  std::string spec_path, csv_path;
  swp->add_option("--spec", spec_path, "JSON sweep spec")->required();
  swp->add_option("--out", csv_path, "CSV path (overrides the output field of the sweep file)");

  // bounds
  auto* bnd = app.add_subcommand("bounds", "Evaluate the closed-form bounds");
  double c_const = 1.0;
  bnd->add_option("--N", N, "matrix size")->required();
  bnd->add_option("--n", n, "rank")->required();
  bnd->add_option("--c", c_const, "theorem constant");

  // turan
  auto* tur = app.add_subcommand("turan", "Gamma graph, maximum clique and the Turan bound");
  double gamma_value = 0.0;
  std::size_t cap = default_vertex_cap;
  tur->add_option("--matrix", matrix_path, "IRLM1 file")->required();
  tur->add_option("--gamma", gamma_value, "edge threshold")->required();
  tur->add_option("--cap", cap, "vertex cap of the exact solver");

  // mvee
  auto* mve = app.add_subcommand("mvee", "Minimum-volume ellipsoid of the symmetric column hull");
  double tol = 1e-6, rank_tol = 1e-10;
  mve->add_option("--matrix", matrix_path, "IRLM1 file")->required();
  mve->add_option("--tol", tol, "solver tolerance in (0, 0.1)");
  mve->add_option("--rank-tol", rank_tol, "relative rank tolerance");

  // auerbach
  auto* aub = app.add_subcommand("auerbach", "Volume-maximizing basis among the columns");
  double delta = 0.01;
  aub->add_option("--matrix", matrix_path, "IRLM1 file")->required();
  aub->add_option("--delta", delta, "swap threshold in (0, 0.5]");
  aub->add_option("--rank-tol", rank_tol, "relative rank tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*gen) {
      const MatrixKind kind = matrix_kind_from_string(kind_name);
      std::optional<FactoredMatrix> A;
      if (kind == MatrixKind::identity) {
        A = make_identity(N);
      } else if (kind == MatrixKind::random_sign) {
        A = make_random_sign(N, n, seed);
      } else if (kind == MatrixKind::block_sparse) {
        BlockSparseOptions opts;
        opts.block_size = block_size;
        opts.generator = block_generator_from_string(generator);
        A = make_block_sparse(N, n, seed, opts);
      } else {
        throw ParameterError("generate: kind must be identity, random_sign or block_sparse");
      }
      write_irlm(out_path, *A);
      const DensityProfile p = distribution_function(*A, 0.0);
      ordered_json o;
      o["kind"] = to_string(kind);
      o["N"] = A->n_dim();
      o["n"] = A->rank_budget();
      o["seed"] = A->provenance().seed;
      o["parameters"] = A->provenance().parameters;
      o["path"] = out_path;
      o["bytes"] = irlm_header_size + 16 * A->n_dim() * A->rank_budget();
      o["error"] = approx_error(*A);
      o["nnz_fraction"] = p.nnz_fraction;
      o["numerical_rank"] = numerical_rank(*A, 1e-10);
      out << o.dump(2) << "\n";
    } else if (*ana) {
      const FactoredMatrix A = read_irlm(matrix_path);
      const GammaRule rule = GammaRule::parse(gamma_text);
      const double c = c_opt ? *c_opt : (rule.kind == GammaRule::Kind::theorem ? rule.value : 1.0);
      const double gamma = rule.resolve(A.n_dim(), A.rank_budget());
      const DensityProfile p = distribution_function(A, gamma);
      const BoundSummary b = bound_summary(A.n_dim(), A.rank_budget(), c);
      ordered_json o;
      o["N"] = A.n_dim();
      o["n"] = A.rank_budget();
      o["gamma_rule"] = rule.str();
      o["gamma"] = gamma;
      o["c"] = c;
      o["approx_error"] = approx_error(A);
      o["F_star"] = p.global_density;
      o["max_column_density"] =
          p.column_densities.empty() ? 0.0 : *std::max_element(p.column_densities.begin(), p.column_densities.end());
      o["nnz_fraction"] = p.nnz_fraction;
      o["bounds"] = bounds_json(b);
      o["ratio_empirical_over_bound"] = p.global_density / b.theorem_density_lower;
      out << o.dump(2) << "\n";
    } else if (*trc) {
      const FactoredMatrix A = read_irlm(matrix_path);
      tcfg.gamma = GammaRule::parse(gamma_text).resolve(A.n_dim(), A.rank_budget());
      tcfg.eps_rule = eps_rule_from_string(eps_name);
      tcfg.manual_eps = manual_eps;
      tcfg.basis = basis_mode_from_string(basis_name);
      const TraceReport rep = trace(A, tcfg);
      const std::string text = to_json(rep);
      if (!report_path.empty()) write_text(report_path, text);
      out << text;
      if (!rep.completed) {
        err << "trace aborted in step '" << rep.abort_step << "': " << rep.abort_message << "\n";
        return exit_numerical;
      }
    } else if (*swp) {
      SweepSpec spec = SweepSpec::parse(read_text(spec_path));
      if (!csv_path.empty()) spec.output = csv_path;
      const std::string csv = sweep_csv(run_sweep(spec));
      if (spec.output.empty()) {
        out << csv;
      } else {
        write_text(spec.output, csv);
      }
    } else if (*bnd) {
      const BoundSummary b = bound_summary(N, n, c_const);
      ordered_json o;
      o["N"] = b.N;
      o["n"] = b.n;
      o["c"] = b.c;
      o["gamma"] = b.gamma;
      const ordered_json vals = bounds_json(b);
      for (const auto& [key, value] : vals.items()) o[key] = value;
      out << o.dump(2) << "\n";
    } else if (*tur) {
      const FactoredMatrix A = read_irlm(matrix_path);
      const GammaGraph g = gamma_graph(A, gamma_value);
      const bool exact = g.vertex_count() <= cap;
      const std::vector<std::size_t> clique = exact ? max_clique(g, cap) : greedy_clique(g);
      const CliqueCheck chk = clique_identity_check(A, clique, gamma_value);
      const auto Nd = static_cast<double>(A.n_dim());
      const double M = static_cast<double>(clique.size()) + 1.0;
      ordered_json o;
      o["N"] = A.n_dim();
      o["gamma"] = gamma_value;
      o["edges"] = g.edge_count();
      o["method"] = exact ? "exact" : "greedy";
      o["clique_size"] = clique.size();
      o["clique_vertices"] = clique;
      o["turan_bound"] = turan_edge_bound(Nd, M);
      o["implied_density_lower"] = implied_density_lower(Nd, M);
      o["clique_check_ok"] = chk.ok;
      o["clique_max_offdiag"] = chk.max_offdiag;
      o["clique_max_diag_deviation"] = chk.max_diag_deviation;
      out << o.dump(2) << "\n";
    } else if (*mve) {
      const FactoredMatrix A = read_irlm(matrix_path);
      const Subspace space = rank_factorize(A, rank_tol);
      std::vector<std::size_t> reps;
      const Matrix pts = representative_points(space, reps);
      const MveeResult r = mvee(pts, tol);
      ordered_json o;
      o["dim"] = space.dim;
      o["points"] = reps.size();
      o["iterations"] = r.iterations;
      o["gap"] = r.gap;
      o["log_det"] = r.ellipsoid.log_det();
      o["max_containment"] = r.max_containment;
      ordered_json shape = ordered_json::array();
      for (Eigen::Index i = 0; i < r.ellipsoid.shape().rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index j = 0; j < r.ellipsoid.shape().cols(); ++j) row.push_back(r.ellipsoid.shape()(i, j));
        shape.push_back(row);
      }
      o["shape"] = shape;
      ordered_json contacts = ordered_json::array();
      for (std::size_t c = 0; c < r.contacts.size(); ++c) {
        ordered_json e;
        e["column"] = reps[r.contacts.indices[c]];
        e["sign"] = r.contacts.signs[c];
        e["weight"] = r.contacts.weights[c];
        contacts.push_back(e);
      }
      o["contacts"] = contacts;
      o["weight_sum"] = r.contacts.weight_sum;
      o["john_residual"] = r.contacts.residual;
      out << o.dump(2) << "\n";
    } else if (*aub) {
      const FactoredMatrix A = read_irlm(matrix_path);
      const Subspace space = rank_factorize(A, rank_tol);
      std::vector<std::size_t> reps;
      const Matrix pts = representative_points(space, reps);
      const AuerbachBasis b = auerbach_basis(pts, delta);
      ordered_json o;
      o["dim"] = space.dim;
      o["indices"] = to_columns(reps, b.indices);
      o["signs"] = b.signs;
      o["coefficient_bound"] = b.coefficient_bound;
      o["abs_det"] = b.abs_det;
      o["swaps"] = b.swaps;
      out << o.dump(2) << "\n";
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return exit_ok;
}

}  // namespace lri
