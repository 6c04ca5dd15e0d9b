#include "doctest.h"
#include "oracles.hpp"
#include "sfk/analysis.hpp"

#include <cmath>

using namespace sfk;

namespace {

/// Orthonormal completion of q from Gram-Schmidt on [q, random columns].
DenseMatrix completion(const DenseMatrix& q, std::uint64_t seed) {
  const std::size_t m = q.rows(), k = q.cols();
  DenseMatrix full(m, m);
  const DenseMatrix r = oracle::random_matrix(m, m - k, seed);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < m; ++i) full(i, j) = q(i, j);
  for (std::size_t j = 0; j < m - k; ++j)
    for (std::size_t i = 0; i < m; ++i) full(i, k + j) = r(i, j);
  const DenseMatrix o = oracle::orthonormalize(full);
  DenseMatrix perp(m, m - k);
  for (std::size_t j = 0; j < m - k; ++j)
    for (std::size_t i = 0; i < m; ++i) perp(i, j) = o(i, k + j);
  return perp;
}

/// ‖(GQ)† G Q_⊥‖₂ with an explicit completion and a normal-equations pseudoinverse.
double leakage_oracle(const DenseMatrix& g, const DenseMatrix& q, std::uint64_t seed) {
  const DenseMatrix gq = oracle::product(g, q);
  const DenseMatrix gqt = oracle::transpose(gq);
  const DenseMatrix pinv = oracle::product(oracle::inverse(oracle::product(gqt, gq)), gqt);
  const DenseMatrix n = oracle::product(pinv, oracle::product(g, completion(q, seed)));
  return oracle::singular_values(oracle::transpose(n))[0];
}

Vector sketched_solution(const DenseMatrix& s, const DenseMatrix& az, const Vector& b) {
  return oracle::normal_equations(oracle::product(s, az), oracle::apply(s, b));
}

double distance(const DenseMatrix& az, const Vector& y, const Vector& b) {
  const Vector f = oracle::apply(az, y);
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) d += (b[i] - f[i]) * (b[i] - f[i]);
  return std::sqrt(d);
}

}  // namespace

TEST_CASE("optimal_residual trivial cases") {
  const Vector b = oracle::random_vector(12, 1);
  CHECK(optimal_residual(from_dense(oracle::random_matrix(12, 8, 1)), DenseMatrix(8, 0), b)
            .r_opt == doctest::Approx(oracle::norm(b)).epsilon(1e-15));

  // Consistent square system; Z spans everything.
  const DenseMatrix a = oracle::random_matrix(10, 10, 2);
  const Vector bc = oracle::apply(a, oracle::random_vector(10, 3));
  const OptimalResidual o = optimal_residual(from_dense(a), DenseMatrix::identity(10), bc);
  CHECK(o.r_opt < 1e-10 * oracle::norm(bc));
  CHECK_FALSE(o.rank_deficient);
}

TEST_CASE("optimal_residual matches dense least squares over A Z") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DenseMatrix a = oracle::random_matrix(30, 20, seed);
    const DenseMatrix z = oracle::random_matrix(20, 5, seed + 10);
    const Vector b = oracle::random_vector(30, seed);
    const OptimalResidual o = optimal_residual(from_dense(a), z, b);
    const DenseMatrix az = oracle::product(a, z);
    const Vector y = oracle::normal_equations(az, b);
    CHECK(std::abs(o.r_opt - distance(az, y, b)) < 1e-10);
    CHECK(oracle::rel_diff(o.y_opt, y) < 1e-9);
    CHECK(oracle::orthonormality_error(o.q) < 1e-12);
    // project_out(Q, b) is the optimal residual vector.
    CHECK(norm2(project_out(o.q, b)) == doctest::Approx(o.r_opt).epsilon(1e-12));
  }
}

TEST_CASE("optimal_residual flags a rank-deficient basis") {
  const DenseMatrix a = oracle::random_matrix(15, 6, 4);
  DenseMatrix z = oracle::random_matrix(6, 3, 5);
  for (std::size_t i = 0; i < 6; ++i) z(i, 2) = z(i, 0) + 2.0 * z(i, 1);
  const Vector b = oracle::random_vector(15, 6);
  const OptimalResidual o = optimal_residual(from_dense(a), z, b);
  CHECK(o.rank_deficient);
  CHECK(o.q.cols() == 2);
  const OptimalResidual two = optimal_residual(from_dense(a), z.left_cols(2), b);
  CHECK(o.r_opt == doctest::Approx(two.r_opt).epsilon(1e-10));
}

TEST_CASE("pinv_leakage agrees with the explicit-completion oracle") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t m = 40, k = 2 + seed, s = 2 * k + 3;
    const DenseMatrix q = oracle::orthonormalize(oracle::random_matrix(m, k, seed));
    const DenseMatrix g = oracle::random_matrix(s, m, seed + 20);
    CHECK(pinv_leakage(g, q) == doctest::Approx(leakage_oracle(g, q, seed)).epsilon(1e-8));
  }
}

TEST_CASE("bound factors are 1 in the unsketched and full-space cases") {
  const DenseMatrix q = oracle::orthonormalize(oracle::random_matrix(30, 6, 1));
  CHECK(bound_sflsqr(identity_sketch(30), q) == doctest::Approx(1.0).epsilon(1e-12));

  const DenseMatrix full = oracle::orthonormalize(oracle::random_matrix(12, 12, 2));
  CHECK(bound_sflsqr(gaussian_sketch(12, 12, 3), full) == doctest::Approx(1.0).epsilon(1e-10));

  CHECK(bound_sflsqr(gaussian_sketch(20, 30, 3), DenseMatrix(30, 0)) == 1.0);
}

TEST_CASE("bound_sflsqr dominates direct sketched least squares") {
  const std::size_t m = 200, k = 10, s = 41;
  const DenseMatrix a = oracle::random_matrix(m, 60, 11);
  const DenseMatrix z = oracle::random_matrix(60, k, 12);
  const DenseMatrix az = oracle::product(a, z);
  const SketchOperator sk = gaussian_sketch(s, m, 11);
  const DenseMatrix sm = sk.materialize();
  const OptimalResidual o0 = optimal_residual(az, oracle::random_vector(m, 0));
  const double factor = bound_sflsqr(sk, o0.q);
  CHECK(factor > 1.0);
  for (std::uint64_t t = 0; t < 50; ++t) {
    const Vector b = oracle::random_vector(m, 100 + t);
    const double r_opt = optimal_residual(az, b).r_opt;
    const double r_s = distance(az, sketched_solution(sm, az, b), b);
    CHECK(r_s >= r_opt - 1e-10);
    CHECK(r_s <= factor * r_opt + 1e-9);
  }
}

TEST_CASE("sketch_transpose uses the exact transpose") {
  const DenseMatrix a = oracle::random_matrix(14, 9, 1);
  const SketchOperator sk = countsketch(5, 9, 2);
  const DenseMatrix ref = oracle::product(sk.materialize(), oracle::transpose(a));
  // An unmatched adjoint must not leak in.
  const LinearOperator op = perturb_adjoint(from_dense(a), 0.3, 4);
  CHECK(oracle::max_abs_diff(sketch_transpose(sk, op), ref) < 1e-13);
}

TEST_CASE("bound_sflsmr factor 1 when Q spans range(A) of rank k") {
  const std::size_t m = 40, n = 25, k = 6;
  const DenseMatrix left = oracle::random_matrix(m, k, 1);
  const DenseMatrix a = oracle::product(left, oracle::random_matrix(k, n, 2));
  const DenseMatrix q = oracle::orthonormalize(left);
  CHECK(bound_sflsmr(gaussian_sketch(2 * k + 1, n, 3), from_dense(a), q) ==
        doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("bound_sflsmr dominates the sflsmr residual, identity sketch") {
  const std::size_t m = 50, n = 30;
  const LinearOperator a = from_dense(oracle::random_matrix(m, n, 7));
  const Vector b = oracle::random_vector(m, 8);
  SolverConfig cfg;
  cfg.maxit = 8;
  cfg.tol = 0.0;
  cfg.keep_basis = true;
  cfg.sketch = identity_sketch(n);
  const SolveHistory h = sflsmr(a, b, cfg);
  for (std::size_t k = 1; k <= h.iterations(); ++k) {
    const OptimalResidual o = optimal_residual(a, h.basis.left_cols(k), b);
    const double f = bound_sflsmr(identity_sketch(n), a, o.q);
    CHECK(h.true_residual[k - 1] <= f * o.r_opt + 1e-9);
    CHECK(h.true_residual[k - 1] >= o.r_opt - 1e-10);
  }
}

TEST_CASE("bound_report on a random problem has no violations") {
  const std::size_t m = 120, n = 60, k = 12;
  const LinearOperator a = from_dense(oracle::random_matrix(m, n, 3));
  const Vector b = oracle::random_vector(m, 4);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SolverConfig cfg;
    cfg.maxit = k;
    cfg.tol = 0.0;
    cfg.window = 2;
    const BoundReport rep = bound_report(a, b, cfg, gaussian_sketch(2 * k + 1, m, seed),
                                         gaussian_sketch(2 * k + 1, n, seed + 50));
    CHECK(rep.rows.size() == k);
    CHECK(rep.violations() == 0);
    for (const BoundRow& r : rep.rows) {
      CHECK(r.factor1 >= 1.0);
      CHECK(r.factor2 >= 1.0);
    }
  }
}

TEST_CASE("sflsqr and sflsmr share their solution subspace") {
  const LinearOperator a = from_dense(oracle::random_matrix(40, 20, 9));
  const Vector b = oracle::random_vector(40, 9);
  SolverConfig cfg;
  cfg.maxit = 10;
  cfg.tol = 0.0;
  cfg.keep_basis = true;
  cfg.sketch = gaussian_sketch(21, 40, 1);
  const SolveHistory h1 = sflsqr(a, b, cfg);
  cfg.sketch = gaussian_sketch(15, 20, 2);
  const SolveHistory h2 = sflsmr(a, b, cfg);
  CHECK(h1.basis.data() == h2.basis.data());
}

TEST_CASE("corollary_check errors and scale invariance") {
  const LinearOperator a = from_dense(oracle::random_matrix(50, 20, 1));
  const DenseMatrix z = oracle::random_matrix(20, 5, 2);
  const Vector b = oracle::random_vector(50, 3);
  CHECK_THROWS_AS(corollary_check(a, z, b, 6, 10, 1), AnalysisError);
  CHECK_THROWS_AS(corollary_check(a, z, b, 12, 0, 1), AnalysisError);

  const CorollaryResult unit = corollary_check(a, z, b, 12, 30, 5, 1.0);
  const CorollaryResult scaled = corollary_check(a, z, b, 12, 30, 5, 1.0 / std::sqrt(12.0));
  CHECK(scaled.empirical_mean == doctest::Approx(unit.empirical_mean).epsilon(1e-12));
  CHECK(unit.factor_stated == doctest::Approx(1.0 + 12.0 / 6.0));
  CHECK(unit.factor_exact == doctest::Approx(1.0 + 5.0 / 6.0));
  CHECK(unit.empirical_mean >= unit.r_opt * unit.r_opt);
}

TEST_CASE("corollary_check mean matches (SQ)† Gaussian moments") {
  // For Gaussian S, E‖(SQ)†S Q_⊥ c‖² = ‖c‖² k/(s−k−1).
  const LinearOperator a = from_dense(oracle::random_matrix(120, 40, 4));
  const DenseMatrix z = oracle::random_matrix(40, 6, 5);
  const Vector b = oracle::random_vector(120, 6);
  const CorollaryResult c = corollary_check(a, z, b, 20, 4000, 9);
  CHECK(std::abs(c.empirical_mean - c.predicted_exact) < 4.0 * c.standard_error);
  CHECK(c.rel_err_exact() < 0.05);
}

TEST_CASE("corollary_check Monte Carlo error shrinks with more trials") {
  const LinearOperator a = from_dense(oracle::random_matrix(60, 20, 7));
  const DenseMatrix z = oracle::random_matrix(20, 4, 8);
  const Vector b = oracle::random_vector(60, 9);
  std::vector<double> err;
  for (std::size_t n = 50; n <= 400; n *= 2) {
    double e = 0.0;
    for (std::uint64_t seed = 0; seed < 12; ++seed)
      e += corollary_check(a, z, b, 10, n, 1000 * seed + n).rel_err_exact();
    err.push_back(e / 12.0);
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double ratio = err[i + 1] / err[i];
    CHECK(ratio > 0.2);
    CHECK(ratio < 1.3);
  }
}
