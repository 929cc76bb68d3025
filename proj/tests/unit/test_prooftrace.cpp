#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "lri/bounds.hpp"
#include "lri/error.hpp"
#include "lri/matrices.hpp"
#include "lri/prooftrace.hpp"

using namespace lri;

namespace {

double output(const TraceStep& s, const std::string& key) {
  for (const auto& [k, v] : s.outputs)
    if (k == key) return v;
  FAIL("missing output " << key);
  return 0.0;
}

void check_report_shape(const TraceReport& r) {
  const auto& names = trace_step_names();
  REQUIRE(r.steps.size() == names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(r.steps[i].name == names[i]);
    if (r.steps[i].check) {
      const Inequality& q = *r.steps[i].check;
      const bool expect = q.relation == "<=" ? q.lhs <= q.rhs : q.lhs >= q.rhs;
      // l1_bound compares against a slightly widened right-hand side.
      if (r.steps[i].name != "l1_bound") CHECK(q.holds == expect);
    }
  }
}

}  // namespace

TEST_SUITE("prooftrace") {
  TEST_CASE("halve_by_density examples") {
    const HalvingResult id = halve_by_density(make_identity(8), 0.5);
    CHECK(id.removed.empty());
    CHECK(id.kept.size() == 8);
    CHECK(id.kappa == doctest::Approx(1.0 / 8.0));

    Matrix left = Matrix::Identity(6, 6) * 0.05;
    left.col(2).setConstant(0.9);
    const FactoredMatrix outlier(left, Matrix::Identity(6, 6));
    const HalvingResult h = halve_by_density(outlier, 0.5);
    CHECK(h.removed == std::vector<std::size_t>{2});

    const FactoredMatrix A = make_random_sign(256, 32, 1);
    const double gamma = gamma_threshold(256, 32, 0.25);
    const HalvingResult r = halve_by_density(A, gamma);
    CHECK(r.kept.size() >= 128);
    CHECK(r.kappa <= 2.0 * r.kept_F_star + 1.0 / 256.0);
    CHECK(r.kept.size() + r.removed.size() == 256);
  }

  TEST_CASE("epsilon_choice examples") {
    CHECK(epsilon_choice(1024, 64, 1) == doctest::Approx(std::log(512.0) / 128.0).epsilon(1e-15));  // 0.0487369
    CHECK(epsilon_choice(1024, 4, 1) == 0.5);
    double prev = 1.0;
    for (double C = 1; C <= 1e6; C *= 10) {
      const double e = epsilon_choice(1024, 64, C);
      CHECK(e > 0.0);
      CHECK(e < prev);
      prev = e;
    }
    CHECK(prev < 1e-6);
  }

  TEST_CASE("large_small_split examples") {
    Vector x(4);
    x << 0.1, -0.2, 0.05, 0.0;
    Split s = large_small_split(x, 0.2);
    CHECK(s.w.isZero());
    CHECK(s.z == x);
    s = large_small_split(x, 0.01);
    CHECK(s.w.head(3) == x.head(3));
    Vector y(6);
    y << 0.5, -0.01, -0.7, 0.02, 0.3, -0.3;
    s = large_small_split(y, 0.3);
    CHECK(s.w + s.z == y);
    for (Eigen::Index i = 0; i < 6; ++i) {
      CHECK((s.w(i) == 0.0 || s.z(i) == 0.0));
      CHECK((std::abs(y(i)) > 0.3) == (s.w(i) != 0.0));
    }
  }

  TEST_CASE("net_inequality examples") {
    const NetInequality zero = net_inequality(1000, 8, 0, 0.1, 1);
    CHECK(zero.log_lhs == doctest::Approx(0.8));
    CHECK_FALSE(zero.holds);
    const NetInequality n16 = net_inequality(100, 16, 2, 0.5, 1);
    CHECK(n16.log_lhs == doctest::Approx(2 * std::log(8 * std::exp(1.0)) + 10).epsilon(1e-14));
    CHECK(std::abs(n16.log_lhs - 16.15888) <= 1e-5);
    CHECK(n16.holds);
    const NetInequality full = net_inequality(1e300, 40, 40, 0.01, 1);
    CHECK(full.log_lhs >= 40.0);
    const NetInequality huge = net_inequality(10, 2000, 1500, 0.5, 1);
    CHECK(std::isinf(huge.lhs));
    CHECK(huge.holds);
  }

  TEST_CASE("final_density_inequality examples") {
    const Inequality q = final_density_inequality(0.1, 1024, 64, 1);
    CHECK(std::abs(q.lhs - 0.29957) <= 1e-5);
    CHECK(std::abs(q.rhs - 0.024368) <= 1e-6);
    CHECK(q.holds);
    CHECK(q.relation == ">=");
    CHECK(final_density_inequality(2.0, 1024, 64, 1).lhs == doctest::Approx(0.0));
    CHECK(std::abs(final_density_inequality(0.5, 3, 1, 1).rhs - 0.10137) <= 1e-5);
    const Inequality z = final_density_inequality(0.0, 1024, 64, 1);
    CHECK(z.lhs == 0.0);
    CHECK_FALSE(z.holds);
    CHECK(final_density_inequality(0.0, 2, 64, 1).holds);
  }

  TEST_CASE("trace on the identity") {
    TraceConfig cfg;
    cfg.gamma = 0.5;
    const TraceReport r = trace(make_identity(16), cfg);
    check_report_shape(r);
    CHECK(r.premise_ok);
    CHECK(r.completed);
    CHECK(r.measured.kappa == doctest::Approx(1.0 / 16.0));
    for (const char* s : {"premise", "density_halving", "rank_factorize", "frame", "expansion", "norm_chain", "b_within_2_5",
                          "separation_1_5"})
      CHECK(r.find(s)->status == "ok");
  }

  TEST_CASE("trace invariants on the random sign fixture") {
    const FactoredMatrix A = make_random_sign(256, 32, 1);
    TraceConfig cfg;
    cfg.gamma = gamma_threshold(256, 32, 0.25);
    const TraceReport r = trace(A, cfg);
    check_report_shape(r);
    CHECK(r.completed);
    CHECK(r.branch == "direct");
    CHECK(output(*r.find("expansion"), "max_relative_residual") <= 1e-8);
    CHECK(r.find("norm_chain")->check->holds);
    CHECK(output(*r.find("l1_bound"), "max_t_l1") <= 1.0 / r.measured.mu * (1.0 + 1e-9));
    CHECK(r.measured.m == std::floor(2.0 * r.measured.kappa * r.measured.k));
    CHECK(output(*r.find("large_small_split"), "max_support") <= r.measured.m);
    CHECK(output(*r.find("b_within_2_5"), "max_deviation_from_A") <= 1.0 / 15.0 + 1e-9);
    // Trace reproduces the same numbers on a second run.
    CHECK(to_json(trace(A, cfg)) == to_json(r));
  }

  TEST_CASE("a failing gate is reported and downstream steps still run") {
    TraceConfig cfg;
    cfg.gamma = 0.02;
    cfg.eps_rule = EpsRule::manual;
    cfg.manual_eps = 1e-3;
    const TraceReport r = trace(make_block_sparse(512, 64, 2), cfg);
    check_report_shape(r);
    CHECK(r.completed);
    CHECK(r.find("gate")->status == "failed");
    for (const char* s : {"row_selection", "large_small_split", "truncation_error", "b_within_2_5", "separation_1_5",
                          "net_inequality", "final_density_inequality"}) {
      CHECK(r.find(s)->status != "skipped");
      CHECK(r.find(s)->check.has_value());
    }
  }

  TEST_CASE("lemmaB branch is labelled reconstructed") {
    TraceConfig cfg;
    cfg.gamma = gamma_threshold(128, 16, 0.25);
    cfg.basis = BasisMode::lemmaB;
    const TraceReport r = trace(make_random_sign(128, 16, 2), cfg);
    check_report_shape(r);
    CHECK(r.completed);
    CHECK(r.branch == "reconstructed");
    CHECK(r.basis_mode == BasisMode::lemmaB);
    CHECK(output(*r.find("frame"), "complement_dim") == 0.0);
  }

  TEST_CASE("config validation") {
    TraceConfig cfg;
    cfg.gamma = -1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.gamma = 0.1;
    cfg.C = 0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.C = 1;
    cfg.eps_rule = EpsRule::manual;
    cfg.manual_eps = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    CHECK_THROWS_AS(basis_mode_from_string("lemmaC"), ParameterError);
  }

  TEST_CASE("report JSON layout") {
    TraceConfig cfg;
    cfg.gamma = 0.25;
    const std::string text = to_json(trace(make_random_sign(64, 16, 3), cfg));
    CHECK(text.back() == '\n');
    CHECK(text.find("-0,") == std::string::npos);
    const auto j = nlohmann::ordered_json::parse(text);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"N", "n", "premise_ok", "completed", "basis_mode", "branch", "config", "steps",
                                           "measured_constants", "abort"});
    CHECK(j["steps"].size() == trace_step_names().size());
    CHECK(j["measured_constants"].contains("c0_hat"));
  }
}
