#include "doctest.h"
#include "oracles.hpp"
#include "sfk/problems.hpp"
#include "sfk/solvers.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace sfk;

namespace {

double noise_norm(const Problem& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.b.size(); ++i) s += (p.b[i] - p.b_true[i]) * (p.b[i] - p.b_true[i]);
  return std::sqrt(s);
}

/// Membership through the quadratic form (p − c)ᵀ R D Rᵀ (p − c) ≤ 1.
double phantom_oracle(double x, double y) {
  const double t[10][6] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},      {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},  {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},     {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},   {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0}, {0.1, 0.023, 0.046, 0.06, -0.605, 0.0}};
  double v = 0.0;
  for (const auto& e : t) {
    const double ph = e[5] * M_PI / 180.0, c = std::cos(ph), s = std::sin(ph);
    const double ia = 1.0 / (e[1] * e[1]), ib = 1.0 / (e[2] * e[2]);
    const double qxx = c * c * ia + s * s * ib, qyy = s * s * ia + c * c * ib;
    const double qxy = c * s * (ia - ib);
    const double dx = x - e[3], dy = y - e[4];
    if (qxx * dx * dx + 2 * qxy * dx * dy + qyy * dy * dy <= 1.0 + 1e-12) v += e[0];
  }
  return std::min(1.0, std::max(0.0, v));
}

bool in_ellipse(double x, double y, double a, double b, double x0, double y0,
                double phi_deg) {
  const double ph = phi_deg * M_PI / 180.0, dx = x - x0, dy = y - y0;
  const double u = dx * std::cos(ph) + dy * std::sin(ph);
  const double v = -dx * std::sin(ph) + dy * std::cos(ph);
  return u * u / (a * a) + v * v / (b * b) <= 1.0 + 1e-9;
}

bool in_asymmetric(double x, double y) {
  return in_ellipse(x, y, 0.11, 0.31, 0.22, 0.0, -18.0) ||
         in_ellipse(x, y, 0.16, 0.41, -0.22, 0.0, 18.0) ||
         in_ellipse(x, y, 0.046, 0.023, -0.08, -0.605, 0.0) ||
         in_ellipse(x, y, 0.023, 0.046, 0.06, -0.605, 0.0);
}

}  // namespace

TEST_CASE("scaled_noise has the exact norm") {
  const Vector b = oracle::random_vector(500, 1);
  for (double d : {0.0, 0.01, 0.1, 0.5}) {
    const Vector e = scaled_noise(b, d, 7);
    CHECK(std::abs(norm2(e) - d * oracle::norm(b)) < 1e-12);
  }
}

TEST_CASE("synthetic_decay spectrum, normalization and noise") {
  const std::size_t m = 60, n = 30;
  const double rho = 1.1;
  const Problem p = synthetic_decay(m, n, rho, 0.1, 3);
  CHECK(p.a.rows() == m);
  CHECK(p.a.cols() == n);
  CHECK(p.x_true == Vector(n, 1.0));
  CHECK(std::abs(oracle::norm(p.b_true) - 1.0) < 1e-12);
  CHECK(std::abs(noise_norm(p) - 0.1) < 1e-12);
  CHECK(p.delta_e == doctest::Approx(0.1).epsilon(1e-12));

  const Vector sig = oracle::singular_values(p.a.materialize());
  for (std::size_t i = 0; i < n; ++i)
    CHECK(std::abs(sig[i] / sig[0] - std::pow(rho, -double(i))) < 1e-10);
  const Vector gkr = svd(p.a.materialize()).sigma;
  CHECK(gkr[0] / gkr[n - 1] == doctest::Approx(std::pow(rho, double(n - 1))).epsilon(1e-6));
}

TEST_CASE("synthetic_decay determinism, zero noise and errors") {
  const Problem p = synthetic_decay(40, 20, 1.05, 0.0, 9);
  CHECK(p.b == p.b_true);
  const Problem q = synthetic_decay(40, 20, 1.05, 0.0, 9);
  CHECK(p.a.materialize().data() == q.a.materialize().data());
  const Problem r = synthetic_decay(40, 20, 1.05, 0.1, 10);
  CHECK(r.a.materialize().data() != p.a.materialize().data());
  CHECK_THROWS_AS(synthetic_decay(10, 20, 1.05, 0.1, 1), ProblemError);
  CHECK_THROWS_AS(synthetic_decay(20, 10, 0.9, 0.1, 1), ProblemError);
  CHECK_THROWS_AS(synthetic_decay(20, 10, 1.05, -0.1, 1), ProblemError);
}

TEST_CASE("shepp_logan matches the per-pixel ellipse oracle") {
  for (std::size_t n : {16, 33, 64}) {
    const DenseMatrix img = shepp_logan(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double x = (2.0 * j + 1.0) / n - 1.0, y = 1.0 - (2.0 * i + 1.0) / n;
        CHECK(std::abs(img(i, j) - phantom_oracle(x, y)) < 1e-12);
      }
    CHECK(img(0, 0) == 0.0);
    CHECK(img(n - 1, n - 1) == 0.0);
  }
  CHECK_THROWS_AS(shepp_logan(8), ProblemError);
}

TEST_CASE("shepp_logan range and mirror symmetry away from the asymmetric ellipses") {
  const std::size_t n = 64;
  const DenseMatrix img = shepp_logan(n);
  for (double v : img.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  std::size_t asym = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(img(i, j) - img(i, n - 1 - j)) > 1e-12) {
        ++asym;
        // Only the two side ellipses and the two off-centre bottom ones break it.
        const double x = (2.0 * j + 1.0) / n - 1.0, y = 1.0 - (2.0 * i + 1.0) / n;
        CHECK((in_asymmetric(x, y) || in_asymmetric(-x, y)));
      }
  CHECK(asym > 0);
}

TEST_CASE("test_scene is dominated by a few singular values") {
  for (std::size_t n : {32, 64}) {
    const DenseMatrix img = test_scene(n);
    const Vector s = svd(img).sigma;
    CHECK(s[9] / s[0] < 0.05);
    double mx = 0.0;
    for (double v : img.data()) {
      CHECK(v >= 0.0);
      mx = std::max(mx, v);
    }
    CHECK(mx == doctest::Approx(1.0));
  }
}

TEST_CASE("default truncation rank keeps the size ratio") {
  CHECK(default_truncation_rank(512) == 30);
  CHECK(default_truncation_rank(1024) == 60);
  CHECK(default_truncation_rank(128) == 8);
  CHECK(default_truncation_rank(32) == 4);
}

TEST_CASE("deblur_inpaint_problem") {
  const Problem p = deblur_inpaint_problem(32, 0.25, 0.8, 0.05, 8, 1);
  CHECK(p.a.cols() == 32 * 32);
  CHECK(p.a.rows() == std::size_t(std::ceil(0.8 * 1024)));
  CHECK(p.a.matched());
  CHECK(std::abs(noise_norm(p) - 0.05 * oracle::norm(p.b_true)) < 1e-12);
  CHECK(p.rank_hint == 8);
  REQUIRE(p.grid.has_value());

  const Problem q = deblur_inpaint_problem(32, 0.25, 0.8, 0.05, 8, 1);
  CHECK(p.b == q.b);

  // No mask and a vanishing PSF: A is the identity.
  const Problem id = deblur_inpaint_problem(16, 1e-6, 1.0, 0.0, 4, 2);
  SolverConfig cfg;
  cfg.maxit = 5;
  const SolveHistory h = lsqr(id.a, id.b, cfg);
  CHECK(h.iterations() == 1);
  CHECK(oracle::rel_diff(h.x, id.x_true) < 1e-12);
}

TEST_CASE("ct_problem matched and unmatched") {
  const Problem m = ct_problem(16, 12, 24, 0.05, 0.0, 1);
  CHECK(m.a.matched());
  CHECK(m.a.rows() == 12 * 24);
  CHECK(std::abs(noise_norm(m) - 0.05 * oracle::norm(m.b_true)) < 1e-12);
  SolverConfig cfg;
  cfg.maxit = 5;
  CHECK_NOTHROW(lsqr(m.a, m.b, cfg));

  const Problem u = ct_problem(24, 20, 36, 0.05, 4e-2, 1);
  CHECK_FALSE(u.a.matched());
  const double measured = asymmetry_measure(u.a, 100, 99);
  CHECK(measured > 0.8 * 4e-2);
  CHECK(measured < 1.2 * 4e-2);
  // Forward map is untouched by the adjoint perturbation.
  CHECK(u.b_true == ct_problem(24, 20, 36, 0.05, 0.0, 1).b_true);
}

TEST_CASE("pgm round trip and header parsing") {
  const auto dir = std::filesystem::temp_directory_path() / "sfk_pgm_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "img.pgm").string();
  const DenseMatrix img = shepp_logan(20);
  write_pgm(path, img, 0.0, 1.0);
  const DenseMatrix back = read_pgm(path);
  CHECK(back.rows() == 20);
  CHECK(oracle::max_abs_diff(back, img) <= 0.5 / 65535.0 + 1e-15);

  DenseMatrix rect(3, 5);
  rect(2, 4) = 7.0;
  rect(0, 1) = -1.0;
  write_pgm(path, rect);
  const DenseMatrix rb = read_pgm(path);
  CHECK(rb.rows() == 3);
  CHECK(rb.cols() == 5);
  CHECK(rb(2, 4) == 1.0);
  CHECK(rb(0, 1) == 0.0);

  {
    std::ofstream f(path, std::ios::binary);
    f << "P5\n# comment\n2 1\n255\n";
    f.put(char(0));
    f.put(char(255));
  }
  const DenseMatrix eight = read_pgm(path);
  CHECK(eight(0, 0) == 0.0);
  CHECK(eight(0, 1) == 1.0);

  {
    std::ofstream f(path, std::ios::binary);
    f << "P2\n2 1\n255\n0 1\n";
  }
  CHECK_THROWS_AS(read_pgm(path), ProblemError);
  CHECK_THROWS_AS(read_pgm((dir / "missing.pgm").string()), ProblemError);
  std::filesystem::remove_all(dir);
}
