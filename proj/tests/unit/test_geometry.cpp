#include <algorithm>
#include <cmath>

#include "../oracles.hpp"
#include "doctest.h"
#include "lri/error.hpp"
#include "lri/geometry.hpp"
#include "lri/matrices.hpp"
#include "lri/rng.hpp"

using namespace lri;

namespace {

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, SplitMix64& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

Matrix sphere_points(Eigen::Index dim, Eigen::Index count, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix p = random_normal(dim, count, rng);
  for (Eigen::Index j = 0; j < count; ++j) p.col(j).normalize();
  return p;
}

Matrix random_orthogonal(Eigen::Index n, SplitMix64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_normal(n, n, rng));
  return qr.householderQ() * Matrix::Identity(n, n);
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("rank_factorize examples") {
    const Subspace s = rank_factorize(make_identity(3), 1e-10);
    CHECK(s.dim == 3);
    CHECK(max_abs(s.coords.transpose() * s.coords - Matrix::Identity(3, 3)) < 1e-12);

    Vector u(4), v(4);
    u << 1, 2, 3, 4;
    v << 1, -1, 0.5, 2;
    const Subspace r1 = rank_factorize(FactoredMatrix(u, v.transpose()), 1e-10);
    CHECK(r1.dim == 1);
    CHECK(r1.coords.rows() == 1);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const FactoredMatrix A = make_random_sign(64, 16, seed);
      const Subspace sp = rank_factorize(A, 1e-10);
      CHECK(sp.dim == 16);
      CHECK(max_abs(sp.basis.transpose() * sp.basis - Matrix::Identity(16, 16)) < 1e-10);
      const Matrix dense = A.dense();
      CHECK((sp.basis * sp.coords - dense).norm() <= 1e-8 * dense.norm());
    }
  }

  TEST_CASE("mvee of the cross-polytope is the unit ball") {
    for (Eigen::Index n : {1, 3, 6}) {
      const MveeResult r = mvee(Matrix::Identity(n, n), 1e-7);
      CHECK(max_abs(r.ellipsoid.shape() - Matrix::Identity(n, n)) <= 1e-7);
      CHECK(r.contacts.size() == std::size_t(n));
      for (double w : r.contacts.weights) CHECK(w == doctest::Approx(1.0).epsilon(1e-6));
    }
    const MveeResult r2 = mvee(2.0 * Matrix::Identity(4, 4), 1e-7);
    CHECK(max_abs(r2.ellipsoid.shape() - 0.25 * Matrix::Identity(4, 4)) <= 1e-7);
  }

  TEST_CASE("mvee on sphere points: containment, certificate, oracle and John bound") {
    const double tol = 1e-7;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Matrix p = sphere_points(5, 40, seed);
      const MveeResult r = mvee(p, tol);
      CHECK(r.max_containment <= 1.0 + tol);
      for (Eigen::Index j = 0; j < p.cols(); ++j) CHECK(p.col(j).dot(r.ellipsoid.shape() * p.col(j)) <= 1.0 + tol);
      CHECK(r.contacts.residual <= 10 * tol);
      CHECK(std::abs(r.contacts.weight_sum - 5.0) <= 10 * tol);
      for (double w : r.contacts.weights) CHECK(w >= 0.0);
      // John bound: the decomposition needs between n and n(n+1)/2 contacts.
      const ContactSet c = contact_points(r.ellipsoid, p, 2 * tol);
      const auto support = std::count_if(c.weights.begin(), c.weights.end(), [](double w) { return w > 0.0; });
      CHECK(support >= 5);
      CHECK(support <= 15);
      CHECK(c.residual <= 10 * tol);
      const oracle::LogDetBracket b = oracle::mvee_logdet_bracket(p, 1e-8);
      CHECK(std::abs(r.ellipsoid.log_det() - b.lower) <= 1e-5);
    }
  }

  TEST_CASE("mvee equivariance") {
    SplitMix64 rng(99);
    const Matrix p = sphere_points(4, 25, 7);
    const Matrix M = mvee(p, 1e-9).ellipsoid.shape();
    const Matrix M2 = mvee(2.0 * p, 1e-9).ellipsoid.shape();
    CHECK(max_abs(M2 - M / 4.0) <= 1e-6 * max_abs(M));
    const Matrix Q = random_orthogonal(4, rng);
    const Matrix MQ = mvee(Q * p, 1e-9).ellipsoid.shape();
    CHECK(max_abs(MQ - Q * M * Q.transpose()) <= 1e-6);
  }

  TEST_CASE("mvee errors") {
    Matrix flat = Matrix::Zero(3, 4);
    flat(0, 0) = 1;
    flat(1, 1) = 1;
    flat(0, 2) = 1;
    flat(1, 3) = -1;
    CHECK_THROWS_AS(mvee(flat, 1e-7), DimensionError);
    MveeOptions opts;
    opts.max_iterations = 2;
    try {
      mvee(sphere_points(5, 40, 3), 1e-12, opts);
      FAIL("expected NonconvergenceError");
    } catch (const NonconvergenceError& e) {
      CHECK(e.gap() > 0.0);
    }
  }

  TEST_CASE("contact_points examples") {
    Matrix pm(3, 6);
    pm << Matrix::Identity(3, 3), -Matrix::Identity(3, 3);
    const ContactSet c = contact_points(Ellipsoid(Matrix::Identity(3, 3)), pm, 1e-9);
    CHECK(c.size() == 3);
    CHECK(c.residual <= 1e-9);
    CHECK(contact_points(Ellipsoid(Matrix::Identity(3, 3)), 0.5 * pm, 1e-9).size() == 0);
  }

  TEST_CASE("l1 constant examples") {
    const Ellipsoid ball(Matrix::Identity(5, 5));
    for (Eigen::Index k = 1; k <= 5; ++k) {
      const L1Constant c = l1_lower_constant(Matrix::Identity(5, 5).leftCols(k), ball, L1Method::exact);
      CHECK(std::abs(c.mu - 1.0 / std::sqrt(double(k))) <= 1e-9);
      CHECK(c.certified);
      CHECK(c.c_hat == doctest::Approx(c.mu * std::sqrt(5.0)));
    }
    Matrix x(3, 3);
    x << 1, 0, 1, 0, 1, 1, 0, 0, 1;
    x.col(2) /= std::sqrt(3.0);
    const Ellipsoid b3(Matrix::Identity(3, 3));
    const double mu = l1_lower_constant(x, b3, L1Method::exact).mu;
    CHECK(std::abs(mu - oracle::l1_grid_min(x.transpose() * x, 120)) <= 1e-6);
    // Never above the smallest contact norm.
    CHECK(mu <= 1.0 + 1e-12);
  }

  TEST_CASE("l1 sampled is an upper estimate and the lower bound is certified") {
    SplitMix64 rng(5);
    const Matrix x = random_normal(6, 6, rng);
    const Ellipsoid ball(Matrix::Identity(6, 6));
    const L1Constant exact = l1_lower_constant(x, ball, L1Method::exact);
    const L1Constant sampled = l1_lower_constant(x, ball, L1Method::sampled);
    CHECK_FALSE(sampled.certified);
    CHECK(sampled.mu >= exact.mu - 1e-12);
    CHECK(exact.mu_lower <= exact.mu + 1e-12);
    CHECK_THROWS_AS(l1_lower_constant(random_normal(22, 21, rng), Ellipsoid(Matrix::Identity(22, 22)), L1Method::exact),
                    SizeError);
  }

  TEST_CASE("select_contact_subset examples") {
    const Ellipsoid ball(Matrix::Identity(4, 4));
    const Matrix ind = Matrix::Identity(4, 4);
    const ContactSelection all = select_contact_subset(ind, ball, 4);
    CHECK(all.indices == std::vector<std::size_t>{0, 1, 2, 3});

    Matrix pair(4, 2);
    pair.col(0) = ind.col(0);
    pair.col(1) = -ind.col(0);
    CHECK(select_contact_subset(pair, ball, 1).indices.size() == 1);
    CHECK_THROWS_AS(select_contact_subset(pair, ball, 2), RankDeficiencyError);

    const Matrix x = sphere_points(5, 8, 13);
    const Ellipsoid b5(Matrix::Identity(5, 5));
    const ContactSelection sel = select_contact_subset(x, b5, 4);
    CHECK(sel.indices.size() == 4);
    Matrix sub(5, 4);
    for (int a = 0; a < 4; ++a) sub.col(a) = x.col(Eigen::Index(sel.indices[std::size_t(a)]));
    // Dropping vectors can only raise the constant of what is left.
    CHECK(l1_lower_constant(sub, b5, L1Method::exact).mu >= l1_lower_constant(x, b5, L1Method::exact).mu - 1e-12);
  }

  TEST_CASE("complete_frame examples") {
    SplitMix64 rng(21);
    const Matrix R = random_normal(6, 6, rng);
    const Ellipsoid ell(R * R.transpose() + Matrix::Identity(6, 6));
    CHECK(complete_frame(Matrix::Identity(6, 6), ell).complement.cols() == 0);
    const Frame f0 = complete_frame(Matrix(6, 0), ell);
    CHECK(max_abs(f0.complement.transpose() * ell.shape() * f0.complement - Matrix::Identity(6, 6)) <= 1e-10);
    const Matrix x = random_normal(6, 4, rng);
    const Frame f = complete_frame(x, ell);
    CHECK(f.complement.cols() == 2);
    CHECK(max_abs(x.transpose() * ell.shape() * f.complement) <= 1e-10);
  }

  TEST_CASE("expand_coefficients examples and reconstruction") {
    SplitMix64 rng(8);
    const Matrix R = random_normal(5, 5, rng);
    const Ellipsoid ell(R * R.transpose() + Matrix::Identity(5, 5));
    const Matrix x = random_normal(5, 3, rng);
    const Frame f = complete_frame(x, ell);
    const Expansion e = expand_coefficients(x, f);
    CHECK(max_abs(e.t - Matrix::Identity(3, 3)) <= 1e-10);
    CHECK(max_abs(e.s) <= 1e-10);
    const Expansion orth = expand_coefficients(f.complement, f);
    CHECK(max_abs(orth.t) <= 1e-10);
    const Matrix cols = random_normal(5, 30, rng);
    const Expansion g = expand_coefficients(cols, f);
    CHECK(max_abs(f.contacts * g.t + f.complement * g.s - cols) <= 1e-8 * max_abs(cols));
    CHECK(g.max_relative_residual <= 1e-8);
  }

  TEST_CASE("auerbach examples") {
    Matrix pm(3, 6);
    pm << Matrix::Identity(3, 3), -Matrix::Identity(3, 3);
    const AuerbachBasis b = auerbach_basis(pm, 0.01);
    CHECK(b.abs_det == doctest::Approx(1.0));
    CHECK(b.coefficient_bound <= 1.0 + 1e-12);
    std::vector<std::size_t> axes;
    for (std::size_t i : b.indices) axes.push_back(i % 3);
    std::sort(axes.begin(), axes.end());
    CHECK(axes == std::vector<std::size_t>{0, 1, 2});

    Matrix inner(3, 6);
    inner << Matrix::Identity(3, 3), 0.5 * Matrix::Identity(3, 3);
    for (std::size_t i : auerbach_basis(inner, 0.01).indices) CHECK(i < 3);

    const Matrix p = sphere_points(5, 30, 17);
    const AuerbachBasis q = auerbach_basis(p, 0.01);
    CHECK(q.coefficient_bound <= 1.01 + 1e-9);
    Matrix basis(5, 5);
    for (int a = 0; a < 5; ++a) basis.col(a) = p.col(Eigen::Index(q.indices[std::size_t(a)]));
    CHECK(Eigen::FullPivLU<Matrix>(basis).solve(p).cwiseAbs().maxCoeff() <= 1.01 + 1e-9);

    const Matrix small = sphere_points(3, 8, 23);
    const AuerbachBasis s = auerbach_basis(small, 0.01);
    CHECK(s.abs_det >= std::pow(1.01, -8.0) * oracle::exhaustive_max_det(small));
    CHECK_THROWS_AS(auerbach_basis(Matrix::Zero(3, 5), 0.01), RankDeficiencyError);
  }
}
