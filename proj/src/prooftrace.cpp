#include <algorithm>
#include <cmath>
#include <limits>

#include "lri/canonical_json.hpp"
#include "lri/error.hpp"
#include "lri/prooftrace.hpp"

namespace lri {

const char* to_string(EpsRule rule) noexcept { return rule == EpsRule::paper ? "paper" : "manual"; }
const char* to_string(BasisMode mode) noexcept { return mode == BasisMode::lemmaA ? "lemmaA" : "lemmaB"; }

EpsRule eps_rule_from_string(const std::string& name) {
  if (name == "paper") return EpsRule::paper;
  if (name == "manual") return EpsRule::manual;
  throw ParameterError("unknown eps rule '" + name + "' (expected paper or manual)");
}

BasisMode basis_mode_from_string(const std::string& name) {
  if (name == "lemmaA") return BasisMode::lemmaA;
  if (name == "lemmaB") return BasisMode::lemmaB;
  throw ParameterError("unknown basis mode '" + name + "' (expected lemmaA or lemmaB)");
}

void TraceConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ParameterError("trace: gamma must be finite and >= 0");
  if (!(C > 0.0)) throw ParameterError("trace: C must be positive");
  if (!(C1 > 0.0)) throw ParameterError("trace: C1 must be positive");
  if (!(mvee_tol > 0.0 && mvee_tol < 0.1)) throw ParameterError("trace: mvee_tol must lie in (0, 0.1)");
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw ParameterError("trace: rank_tol must lie in (0, 1)");
  if (!(auerbach_delta > 0.0 && auerbach_delta <= 0.5)) {
    throw ParameterError("trace: auerbach delta must lie in (0, 0.5]");
  }
  if (eps_rule == EpsRule::manual) {
    if (!manual_eps) throw ParameterError("trace: eps rule 'manual' needs manual_eps");
    if (!(*manual_eps > 0.0 && *manual_eps < 1.0)) throw ParameterError("trace: manual_eps must lie in (0, 1)");
  }
}

const TraceStep* TraceReport::find(const std::string& name) const {
  for (const TraceStep& s : steps)
    if (s.name == name) return &s;
  return nullptr;
}

const std::vector<std::string>& trace_step_names() {
  static const std::vector<std::string> names = {
      "premise",        "density_halving",  "rank_factorize",    "epsilon_choice",
      "frame",          "expansion",        "norm_chain",        "l1_bound",
      "gate",           "row_selection",    "large_small_split", "truncation_error",
      "b_within_2_5",   "separation_1_5",   "net_inequality",    "final_density_inequality",
  };
  return names;
}

HalvingResult halve_by_density(const FactoredMatrix& A, double gamma) {
  if (!(gamma >= 0.0)) throw ParameterError("halve_by_density: gamma must be >= 0");
  const RowMatrix& a = A.dense();
  const std::size_t N = A.n_dim();
  std::vector<std::uint64_t> counts(N, 0);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (std::abs(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > gamma) ++counts[j];
    }
  }
  for (std::uint64_t c : counts) total += c;

  HalvingResult h;
  const auto Nd = static_cast<double>(N);
  h.F_star = static_cast<double>(total) / (Nd * Nd);
  // density_j > 2 F*  <=>  count_j * N > 2 * total
  for (std::size_t j = 0; j < N; ++j) {
    if (counts[j] * N > 2 * total) {
      h.removed.push_back(j);
    } else {
      h.kept.push_back(j);
    }
  }
  const std::size_t Np = h.kept.size();
  std::uint64_t kept_total = 0;
  for (std::size_t j : h.kept) {
    std::size_t c = 0;
    for (std::size_t i : h.kept) {
      if (std::abs(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > gamma) ++c;
    }
    kept_total += c;
    h.kappa_count = std::max(h.kappa_count, c);
  }
  if (Np > 0) {
    const auto Npd = static_cast<double>(Np);
    h.kappa = static_cast<double>(h.kappa_count) / Npd;
    h.kept_F_star = static_cast<double>(kept_total) / (Npd * Npd);
  }
  return h;
}

double epsilon_choice(double N, double n, double C) {
  if (!(N >= 3.0) || !(n >= 1.0)) throw ParameterError("epsilon_choice: need N >= 3 and n >= 1");
  if (!(C > 0.0)) throw ParameterError("epsilon_choice: C must be positive");
  return std::min(0.5, std::log(N / 2.0) / (2.0 * C * n));
}

Split large_small_split(const Vector& x, double gamma) {
  Split s{Vector::Zero(x.size()), x};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i)) > gamma) {
      s.w(i) = x(i);
      s.z(i) = 0.0;
    }
  }
  return s;
}

NetInequality net_inequality(double N_effective, double n, double m, double eps, double C) {
  if (!(m >= 0.0)) throw ParameterError("net_inequality: m must be >= 0");
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("net_inequality: eps must lie in (0, 1)");
  if (!(n >= 1.0)) throw ParameterError("net_inequality: n must be >= 1");
  NetInequality r;
  const double variants = m > 0.0 ? m * std::log(std::exp(1.0) * n / m) : 0.0;
  r.log_lhs = variants + C * (m + n * eps);
  r.lhs = std::exp(r.log_lhs);
  r.rhs = N_effective;
  r.holds = N_effective <= 0.0 || r.log_lhs >= std::log(N_effective);
  return r;
}

Inequality final_density_inequality(double kappa, double N, double n, double C1) {
  if (!(kappa >= 0.0)) throw ParameterError("final_density_inequality: kappa must be >= 0");
  if (!(N >= 1.0) || !(n >= 1.0)) throw ParameterError("final_density_inequality: need N >= 1 and n >= 1");
  if (!(C1 > 0.0)) throw ParameterError("final_density_inequality: C1 must be positive");
  Inequality r;
  r.relation = ">=";
  r.lhs = kappa == 0.0 ? 0.0 : kappa * std::log(2.0 * C1 / kappa);
  r.rhs = std::log(N / 2.0) / (4.0 * n);
  r.holds = r.lhs >= r.rhs;
  return r;
}

namespace {

Inequality le(double lhs, double rhs) { return {lhs, rhs, lhs <= rhs, "<="}; }
Inequality ge(double lhs, double rhs) { return {lhs, rhs, lhs >= rhs, ">="}; }

double l1_norm(const Matrix& t, Eigen::Index j) { return t.col(j).cwiseAbs().sum(); }

class Replay {
 public:
  Replay(TraceReport& report) : report_(report) {}

  TraceStep& begin(const std::string& name) {
    const auto& names = trace_step_names();
    if (next_ >= names.size() || names[next_] != name) throw std::logic_error("trace step out of order: " + name);
    ++next_;
    report_.steps.push_back(TraceStep{name, "ok", {}, {}, std::nullopt, {}});
    return report_.steps.back();
  }

  static void check(TraceStep& step, const Inequality& ineq) {
    step.check = ineq;
    step.status = ineq.holds ? "ok" : "failed";
  }

  void abort(TraceStep& step, const Error& e) {
    step.status = "aborted";
    step.notes = e.what();
    if (const auto* nc = dynamic_cast<const NonconvergenceError*>(&e)) step.outputs.emplace_back("gap", nc->gap());
    report_.abort_step = step.name;
    report_.abort_kind = to_string(e.kind());
    report_.abort_message = e.what();
    report_.completed = false;
    skip_rest("skipped after structural failure in step '" + step.name + "'");
  }

  void skip_rest(const std::string& why) {
    const auto& names = trace_step_names();
    while (next_ < names.size()) {
      report_.steps.push_back(TraceStep{names[next_++], "skipped", {}, {}, std::nullopt, why});
    }
  }

 private:
  TraceReport& report_;
  std::size_t next_ = 0;
};

}  // namespace

TraceReport trace(const FactoredMatrix& A, const TraceConfig& cfg) {
  cfg.validate();
  TraceReport rep;
  rep.N = A.n_dim();
  rep.n = A.rank_budget();
  rep.basis_mode = cfg.basis;
  rep.branch = cfg.basis == BasisMode::lemmaA ? "direct" : "reconstructed";
  rep.config = cfg;
  Replay replay(rep);

  const double gamma = cfg.gamma;
  const auto Nd = static_cast<double>(rep.N);
  const bool lemma_a = cfg.basis == BasisMode::lemmaA;

  // Premise. A failed premise is a finding; the replay still runs so the
  // downstream quantities can be inspected.
  {
    TraceStep& s = replay.begin("premise");
    const double err = approx_error(A);
    s.inputs = {{"N", Nd}, {"n", static_cast<double>(rep.n)}};
    s.outputs = {{"approx_error", err}};
    Replay::check(s, le(err, 1.0 / 3.0));
    rep.premise_ok = s.check->holds;
    if (!rep.premise_ok) s.notes = "approximation error exceeds 1/3; later steps are computed but their guarantees do not apply";
  }

  // (1) Density halving.
  HalvingResult half;
  {
    TraceStep& s = replay.begin("density_halving");
    half = halve_by_density(A, gamma);
    s.inputs = {{"gamma", gamma}};
    s.outputs = {{"F_star", half.F_star},
                 {"kept", static_cast<double>(half.kept.size())},
                 {"removed", static_cast<double>(half.removed.size())},
                 {"kept_F_star", half.kept_F_star},
                 {"kappa", half.kappa}};
    Replay::check(s, ge(static_cast<double>(half.kept.size()), Nd / 2.0));
  }
  const FactoredMatrix sub = principal_submatrix(A, half.kept);
  const std::size_t Np = half.kept.size();
  const auto Npd = static_cast<double>(Np);
  rep.measured.kappa = half.kappa;

  // (2) Column space.
  Subspace space;
  {
    TraceStep& s = replay.begin("rank_factorize");
    s.inputs = {{"rank_tol", cfg.rank_tol}, {"rank_budget", static_cast<double>(sub.rank_budget())}};
    try {
      space = rank_factorize(sub, cfg.rank_tol);
      if (space.dim == 0) throw RankDeficiencyError("the kept submatrix is numerically zero");
    } catch (const Error& e) {
      replay.abort(s, e);
      return rep;
    }
    const RowMatrix& dense = sub.dense();
    const Matrix rebuilt = space.basis * space.coords;
    const double rel = (rebuilt - Matrix(dense)).norm() / std::max(Matrix(dense).norm(), 1e-300);
    const double orth =
        (space.basis.transpose() * space.basis - Matrix::Identity(space.basis.cols(), space.basis.cols()))
            .cwiseAbs()
            .maxCoeff();
    s.outputs = {{"dim", static_cast<double>(space.dim)},
                 {"reconstruction_error", rel},
                 {"orthonormality_defect", orth}};
    Replay::check(s, le(static_cast<double>(space.dim), static_cast<double>(sub.rank_budget())));
  }
  const std::size_t n = space.dim;
  const auto nd = static_cast<double>(n);
  rep.n = n;
  const Matrix& coords = space.coords;

  // epsilon and the contact-subset target.
  double eps = 0.0;
  std::size_t target_k = n;
  {
    TraceStep& s = replay.begin("epsilon_choice");
    s.inputs = {{"N", Nd}, {"n", nd}, {"C", cfg.C}};
    try {
      eps = cfg.eps_rule == EpsRule::manual ? *cfg.manual_eps : epsilon_choice(Nd, nd, cfg.C);
    } catch (const Error& e) {
      replay.abort(s, e);
      return rep;
    }
    target_k = static_cast<std::size_t>(std::ceil(nd * (1.0 - eps)));
    target_k = std::clamp<std::size_t>(target_k, 1, n);
    const double n_over_ln = nd / std::log(Nd);
    s.outputs = {{"eps", eps}, {"target_k", static_cast<double>(target_k)}, {"n_over_lnN", n_over_ln}};
    s.notes = cfg.eps_rule == EpsRule::manual ? "manual eps" : "eps = min(1/2, ln(N/2)/(2Cn))";
    rep.measured.eps = eps;
    rep.measured.n_over_lnN = n_over_ln;
  }

  // (3) Frame: contact subset plus D-orthogonal complement, or an Auerbach basis.
  Frame frame;
  std::vector<std::size_t> chosen;  // column of the kept submatrix behind each x^m
  std::vector<int> signs;
  std::optional<Ellipsoid> ell;
  {
    TraceStep& s = replay.begin("frame");
    const std::vector<std::size_t> reps = symmetric_representatives(coords);
    Matrix points(coords.rows(), static_cast<Eigen::Index>(reps.size()));
    for (std::size_t c = 0; c < reps.size(); ++c) {
      points.col(static_cast<Eigen::Index>(c)) = coords.col(static_cast<Eigen::Index>(reps[c]));
    }
    s.inputs = {{"points", static_cast<double>(reps.size())}, {"n", nd}};
    try {
      if (lemma_a) {
        s.inputs.emplace_back("mvee_tol", cfg.mvee_tol);
        s.inputs.emplace_back("target_k", static_cast<double>(target_k));
        const MveeResult mv = mvee(points, cfg.mvee_tol);
        ell = mv.ellipsoid;
        const ContactSet contacts = contact_points(*ell, points, 2.0 * cfg.mvee_tol);
        if (contacts.size() == 0) throw RankDeficiencyError("no contact points found at the solver tolerance");
        Matrix cmat(points.rows(), static_cast<Eigen::Index>(contacts.size()));
        for (std::size_t c = 0; c < contacts.size(); ++c) {
          cmat.col(static_cast<Eigen::Index>(c)) =
              contacts.signs[c] * points.col(static_cast<Eigen::Index>(contacts.indices[c]));
        }
        // Best effort: shrink the target until enough independent contacts exist.
        std::size_t want = std::min(target_k, contacts.size());
        std::optional<ContactSelection> sel;
        while (!sel) {
          try {
            sel = select_contact_subset(cmat, *ell, want, cfg.l1);
          } catch (const RankDeficiencyError&) {
            if (want <= 1) throw;
            --want;
          }
        }
        Matrix x(points.rows(), static_cast<Eigen::Index>(sel->indices.size()));
        for (std::size_t m = 0; m < sel->indices.size(); ++m) {
          const std::size_t c = sel->indices[m];
          x.col(static_cast<Eigen::Index>(m)) = cmat.col(static_cast<Eigen::Index>(c));
          chosen.push_back(reps[contacts.indices[c]]);
          signs.push_back(contacts.signs[c]);
        }
        frame = complete_frame(x, *ell);
        const double k = static_cast<double>(frame.k());
        s.outputs = {{"mvee_iterations", static_cast<double>(mv.iterations)},
                     {"mvee_gap", mv.gap},
                     {"max_containment", mv.max_containment},
                     {"log_det", ell->log_det()},
                     {"contacts", static_cast<double>(contacts.size())},
                     {"john_weight_sum", contacts.weight_sum},
                     {"john_residual", contacts.residual},
                     {"k", k},
                     {"shortfall", static_cast<double>(target_k) - k},
                     {"selection_mu", sel->mu},
                     {"gram_log_det", sel->gram_log_det},
                     {"complement_dim", static_cast<double>(frame.complement.cols())}};
        Replay::check(s, ge(k, nd * (1.0 - eps)));
        if (frame.k() < target_k) s.notes = "fewer independent contacts than the target; continuing with the achieved k";
      } else {
        s.inputs.emplace_back("delta", cfg.auerbach_delta);
        const AuerbachBasis ab = auerbach_basis(points, cfg.auerbach_delta);
        Matrix x(points.rows(), static_cast<Eigen::Index>(ab.indices.size()));
        for (std::size_t m = 0; m < ab.indices.size(); ++m) {
          x.col(static_cast<Eigen::Index>(m)) = ab.signs[m] * points.col(static_cast<Eigen::Index>(ab.indices[m]));
          chosen.push_back(reps[ab.indices[m]]);
          signs.push_back(ab.signs[m]);
        }
        frame.contacts = x;
        frame.complement = Matrix(points.rows(), 0);
        frame.shape = Matrix::Identity(points.rows(), points.rows());
        s.outputs = {{"k", static_cast<double>(frame.k())},
                     {"swaps", static_cast<double>(ab.swaps)},
                     {"abs_det", ab.abs_det},
                     {"coefficient_bound", ab.coefficient_bound},
                     {"complement_dim", 0.0}};
        Replay::check(s, le(ab.coefficient_bound, 1.0 + cfg.auerbach_delta + 1e-9));
        s.notes = "Auerbach basis; complement empty";
      }
    } catch (const Error& e) {
      replay.abort(s, e);
      return rep;
    }
  }
  const std::size_t k = frame.k();
  const auto kd = static_cast<double>(k);
  rep.measured.k = kd;

  // (4) Expansion v^j = sum t x + sum s y.
  Expansion ex;
  {
    TraceStep& s = replay.begin("expansion");
    s.inputs = {{"columns", Npd}, {"k", kd}, {"complement_dim", static_cast<double>(frame.complement.cols())}};
    try {
      ex = expand_coefficients(coords, frame);
    } catch (const Error& e) {
      replay.abort(s, e);
      return rep;
    }
    s.outputs = {{"max_relative_residual", ex.max_relative_residual}};
    Replay::check(s, le(ex.max_relative_residual, 1e-8));
  }

  std::vector<double> t1(Np);
  double t1_max = 0.0;
  for (std::size_t j = 0; j < Np; ++j) {
    t1[j] = l1_norm(ex.t, static_cast<Eigen::Index>(j));
    t1_max = std::max(t1_max, t1[j]);
  }

  // Norm chain |proj v|_D <= |v|_D <= ||v||_K <= 1.
  std::vector<double> proj(Np, 0.0);
  double proj_max = 0.0;
  {
    TraceStep& s = replay.begin("norm_chain");
    if (lemma_a) {
      const Matrix gram = frame.contacts.transpose() * ell->shape() * frame.contacts;
      double d_max = 0.0, excess = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < Np; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double d = ell->norm(coords.col(jj));
        const Vector tj = ex.t.col(jj);
        proj[j] = std::sqrt(std::max(0.0, tj.dot(gram * tj)));
        d_max = std::max(d_max, d);
        proj_max = std::max(proj_max, proj[j]);
        excess = std::max(excess, proj[j] - d);
      }
      s.inputs = {{"mvee_tol", cfg.mvee_tol}};
      s.outputs = {{"max_D_norm", d_max}, {"max_projection_D_norm", proj_max}, {"max_projection_excess", excess}};
      Replay::check(s, le(d_max, 1.0 + cfg.mvee_tol));
    } else {
      double tinf = 0.0;
      for (std::size_t j = 0; j < Np; ++j) tinf = std::max(tinf, ex.t.col(static_cast<Eigen::Index>(j)).cwiseAbs().maxCoeff());
      s.inputs = {{"delta", cfg.auerbach_delta}};
      s.outputs = {{"max_coefficient", tinf}};
      Replay::check(s, le(tinf, 1.0 + cfg.auerbach_delta + 1e-9));
      s.notes = "coefficients over the Auerbach basis";
    }
  }

  // l1 bound on the coefficients.
  double l1_bound = 0.0;  // bound on ||t^j||_1 used by the gate
  double mu = 0.0;
  {
    TraceStep& s = replay.begin("l1_bound");
    if (lemma_a) {
      const L1Method method = k <= l1_exact_max_k ? L1Method::exact : L1Method::sampled;
      const L1Constant lc = l1_lower_constant(frame.contacts, *ell, method, cfg.l1);
      mu = lc.mu;
      double ratio_min = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < Np; ++j) {
        if (t1[j] > 0.0) ratio_min = std::min(ratio_min, proj[j] / t1[j]);
      }
      if (!lc.certified) mu = std::min(mu, ratio_min);
      const double mu_cert = lc.certified ? lc.mu : lc.mu_lower;
      l1_bound = 1.0 / mu;
      rep.measured.mu = mu;
      rep.measured.mu_lower = lc.mu_lower;
      rep.measured.c0_hat = mu * std::sqrt(nd) / eps;
      s.inputs = {{"k", kd}, {"certified", lc.certified ? 1.0 : 0.0}};
      s.outputs = {{"mu", mu},
                   {"mu_lower", lc.mu_lower},
                   {"c_hat", mu * std::sqrt(nd)},
                   {"c0_hat", rep.measured.c0_hat},
                   {"max_t_l1", t1_max},
                   {"facets_solved", static_cast<double>(lc.facets_solved)},
                   {"kkt_residual", lc.kkt_residual}};
      // ||t^j||_1 <= |proj v^j|_D / mu; the certified constant keeps the check sound.
      Replay::check(s, le(t1_max, proj_max / mu_cert * (1.0 + 1e-9)));
      s.notes = lc.certified ? "exact facet enumeration"
                             : "sampled facets (upper estimate of mu); check uses the certified lower bound";
    } else {
      l1_bound = nd * (1.0 + cfg.auerbach_delta);
      mu = 1.0 / l1_bound;
      rep.measured.mu = mu;
      rep.measured.mu_lower = mu;
      rep.measured.c0_hat = mu * std::sqrt(nd) / eps;
      s.inputs = {{"n", nd}, {"delta", cfg.auerbach_delta}};
      s.outputs = {{"max_t_l1", t1_max}, {"bound", l1_bound}, {"c0_hat", rep.measured.c0_hat}};
      Replay::check(s, le(t1_max, l1_bound));
      s.notes = "bound n(1 + delta) from coefficientwise bounds";
    }
  }

  // Gate: gamma * (l1 bound) <= 1/15.
  {
    TraceStep& s = replay.begin("gate");
    s.inputs = {{"gamma", gamma}, {"eps", eps}, {"c0_hat", rep.measured.c0_hat}};
    if (lemma_a) {
      Replay::check(s, le(gamma / eps, rep.measured.c0_hat / (15.0 * std::sqrt(nd))));
      s.notes = "gamma/eps <= c0_hat/(15 sqrt(n)), i.e. gamma <= mu/15";
    } else {
      Replay::check(s, le(gamma * l1_bound, 1.0 / 15.0));
      s.notes = "gamma * n(1 + delta) <= 1/15";
    }
    if (!s.check->holds) s.notes += "; gate failed, later checks are still computed";
  }

  // (6) Rows with density <= 2 kappa among the chosen columns.
  // x_i has coordinates sign_m * A'(i, j_m).
  const RowMatrix& dense = sub.dense();
  Matrix xrows(static_cast<Eigen::Index>(Np), static_cast<Eigen::Index>(k));
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t i = 0; i < Np; ++i) {
      xrows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
          signs[m] * dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(chosen[m]));
    }
  }
  std::vector<std::size_t> rows;
  {
    TraceStep& s = replay.begin("row_selection");
    // count_i / k <= 2 kappa  <=>  count_i * N' <= 2 * kappa_count * k
    std::size_t max_count = 0;
    for (std::size_t i = 0; i < Np; ++i) {
      std::size_t c = 0;
      for (std::size_t m = 0; m < k; ++m)
        if (std::abs(xrows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m))) > gamma) ++c;
      if (c * Np <= 2 * half.kappa_count * k) {
        rows.push_back(i);
        max_count = std::max(max_count, c);
      }
    }
    s.inputs = {{"kappa", half.kappa}, {"k", kd}, {"rows", Npd}};
    s.outputs = {{"selected", static_cast<double>(rows.size())},
                 {"max_row_density", kd > 0 ? static_cast<double>(max_count) / kd : 0.0}};
    Replay::check(s, ge(static_cast<double>(rows.size()), Npd / 2.0));
  }
  const std::size_t nI = rows.size();
  const auto nId = static_cast<double>(nI);

  // (7) Large/small split and m = floor(2 kappa k).
  const std::size_t m_count = k == 0 || Np == 0 ? 0 : (2 * half.kappa_count * k) / Np;
  const auto md = static_cast<double>(m_count);
  rep.measured.m = md;
  Matrix w(static_cast<Eigen::Index>(nI), static_cast<Eigen::Index>(k));
  Matrix z(static_cast<Eigen::Index>(nI), static_cast<Eigen::Index>(k));
  {
    TraceStep& s = replay.begin("large_small_split");
    std::size_t max_support = 0;
    for (std::size_t r = 0; r < nI; ++r) {
      const Split sp = large_small_split(xrows.row(static_cast<Eigen::Index>(rows[r])).transpose(), gamma);
      w.row(static_cast<Eigen::Index>(r)) = sp.w.transpose();
      z.row(static_cast<Eigen::Index>(r)) = sp.z.transpose();
      std::size_t supp = 0;
      for (Eigen::Index c = 0; c < sp.w.size(); ++c)
        if (sp.w(c) != 0.0) ++supp;
      max_support = std::max(max_support, supp);
    }
    s.inputs = {{"gamma", gamma}, {"kappa", half.kappa}, {"k", kd}};
    s.outputs = {{"m", md}, {"max_support", static_cast<double>(max_support)}};
    Replay::check(s, le(static_cast<double>(max_support), md));
  }

  // Restrict t, s and the complement rows to I.
  Matrix tI(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(nI));
  Matrix sI(ex.s.rows(), static_cast<Eigen::Index>(nI));
  const Matrix yfull = space.basis * frame.complement;  // N' x (n - k)
  Matrix yI(static_cast<Eigen::Index>(nI), yfull.cols());
  Matrix aI(static_cast<Eigen::Index>(nI), static_cast<Eigen::Index>(nI));
  double t1_I = 0.0;
  for (std::size_t r = 0; r < nI; ++r) {
    const auto jr = static_cast<Eigen::Index>(rows[r]);
    tI.col(static_cast<Eigen::Index>(r)) = ex.t.col(jr);
    sI.col(static_cast<Eigen::Index>(r)) = ex.s.col(jr);
    yI.row(static_cast<Eigen::Index>(r)) = yfull.row(jr);
    t1_I = std::max(t1_I, t1[rows[r]]);
    for (std::size_t c = 0; c < nI; ++c) {
      aI(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = dense(jr, static_cast<Eigen::Index>(rows[c]));
    }
  }

  // |<x_i, t^j> - <w_i, t^j>| = |<z_i, t^j>| <= ||t^j||_1 gamma.
  {
    TraceStep& s = replay.begin("truncation_error");
    const double trunc = nI > 0 ? (z * tI).cwiseAbs().maxCoeff() : 0.0;
    s.inputs = {{"gamma", gamma}, {"max_t_l1", t1_I}};
    s.outputs = {{"max_truncation", trunc}, {"l1_times_gamma", t1_I * gamma}};
    Replay::check(s, le(trunc, 1.0 / 15.0));
  }

  // B_ij = <w_i, t^j> + <y_i, s^j>, i, j in I.
  Matrix b = w * tI;
  if (yI.cols() > 0) b += yI * sI;
  {
    TraceStep& s = replay.begin("b_within_2_5");
    double dev = 0.0, from_a = 0.0;
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        dev = std::max(dev, std::abs(b(i, j) - (i == j ? 1.0 : 0.0)));
        from_a = std::max(from_a, std::abs(b(i, j) - aI(i, j)));
      }
    }
    s.inputs = {{"rows", nId}};
    s.outputs = {{"max_deviation_from_identity", dev}, {"max_deviation_from_A", from_a}};
    Replay::check(s, le(dev, 2.0 / 5.0));
  }

  // Rows of B pairwise 1/5-separated in l_inf.
  {
    TraceStep& s = replay.begin("separation_1_5");
    double min_dist = std::numeric_limits<double>::infinity();
    const Eigen::Index rI = b.rows();
    for (Eigen::Index i = 0; i < rI; ++i) {
      for (Eigen::Index j = i + 1; j < rI; ++j) {
        // Coordinates i and j give a lower bound; scan only when it is not enough.
        double d = std::max(std::abs(b(i, i) - b(j, i)), std::abs(b(i, j) - b(j, j)));
        if (d < 0.2 || d < min_dist) d = (b.row(i) - b.row(j)).cwiseAbs().maxCoeff();
        min_dist = std::min(min_dist, d);
      }
    }
    s.inputs = {{"rows", nId}};
    s.outputs = {{"min_row_distance", min_dist}};
    Replay::check(s, ge(min_dist, 0.2));
  }

  // Net count.
  {
    TraceStep& s = replay.begin("net_inequality");
    const NetInequality net = net_inequality(nId, nd, md, eps, cfg.C);
    s.inputs = {{"N_effective", nId}, {"n", nd}, {"m", md}, {"eps", eps}, {"C", cfg.C}};
    s.outputs = {{"log_lhs", net.log_lhs}, {"N_over_2", Nd / 2.0}};
    Replay::check(s, Inequality{net.lhs, net.rhs, net.holds, ">="});
    rep.measured.net_lhs = net.lhs;
    rep.measured.net_rhs = net.rhs;
  }

  // Final density inequality.
  {
    TraceStep& s = replay.begin("final_density_inequality");
    const Inequality fin = final_density_inequality(half.kappa, Nd, nd, cfg.C1);
    s.inputs = {{"kappa", half.kappa}, {"N", Nd}, {"n", nd}, {"C1", cfg.C1}};
    Replay::check(s, fin);
    rep.measured.final_lhs = fin.lhs;
    rep.measured.final_rhs = fin.rhs;
  }

  rep.completed = true;
  return rep;
}

std::string to_json(const TraceReport& r) {
  using nlohmann::ordered_json;
  auto values = [](const NamedValues& v) {
    ordered_json o = ordered_json::object();
    for (const auto& [key, x] : v) o[key] = x;
    return o;
  };
  ordered_json doc;
  doc["N"] = r.N;
  doc["n"] = r.n;
  doc["premise_ok"] = r.premise_ok;
  doc["completed"] = r.completed;
  doc["basis_mode"] = to_string(r.basis_mode);
  doc["branch"] = r.branch;
  ordered_json cfg;
  cfg["gamma"] = r.config.gamma;
  cfg["C"] = r.config.C;
  cfg["C1"] = r.config.C1;
  cfg["mvee_tol"] = r.config.mvee_tol;
  cfg["eps_rule"] = to_string(r.config.eps_rule);
  cfg["manual_eps"] = r.config.manual_eps ? ordered_json(*r.config.manual_eps) : ordered_json(nullptr);
  cfg["auerbach_delta"] = r.config.auerbach_delta;
  cfg["rank_tol"] = r.config.rank_tol;
  doc["config"] = cfg;
  ordered_json steps = ordered_json::array();
  for (const TraceStep& s : r.steps) {
    ordered_json o;
    o["name"] = s.name;
    o["status"] = s.status;
    o["inputs"] = values(s.inputs);
    o["outputs"] = values(s.outputs);
    if (s.check) {
      ordered_json c;
      c["lhs"] = s.check->lhs;
      c["relation"] = s.check->relation;
      c["rhs"] = s.check->rhs;
      c["holds"] = s.check->holds;
      o["check"] = c;
    } else {
      o["check"] = nullptr;
    }
    o["notes"] = s.notes;
    steps.push_back(o);
  }
  doc["steps"] = steps;
  const MeasuredConstants& m = r.measured;
  doc["measured_constants"] = values({{"c0_hat", m.c0_hat},
                                      {"mu", m.mu},
                                      {"mu_lower", m.mu_lower},
                                      {"kappa", m.kappa},
                                      {"m", m.m},
                                      {"k", m.k},
                                      {"eps", m.eps},
                                      {"net_lhs", m.net_lhs},
                                      {"net_rhs", m.net_rhs},
                                      {"final_lhs", m.final_lhs},
                                      {"final_rhs", m.final_rhs},
                                      {"n_over_lnN", m.n_over_lnN}});
  if (!r.abort_step.empty()) {
    ordered_json a;
    a["step"] = r.abort_step;
    a["kind"] = r.abort_kind;
    a["message"] = r.abort_message;
    doc["abort"] = a;
  } else {
    doc["abort"] = nullptr;
  }
  return canonical_dump(doc);
}

}  // namespace lri
