#include "doctest.h"
#include "oracles.hpp"
#include "sfk/operators.hpp"
#include "sfk/random.hpp"

#include <cmath>
#include <numbers>
#include <set>

using namespace sfk;

namespace {

double adjoint_gap(const LinearOperator& op, std::uint64_t seed) {
  Rng rng(seed);
  const Vector x = unit_vector(op.rows(), rng);
  const Vector y = unit_vector(op.cols(), rng);
  const double lhs = dot(op.forward(y), x), rhs = dot(y, op.adjoint(x));
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

double linearity_gap(const LinearOperator& op, bool adjoint, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = adjoint ? op.rows() : op.cols();
  const Vector x = gaussian_vector(d, rng), y = gaussian_vector(d, rng);
  const double alpha = 1.7, beta = -0.3;
  Vector comb(d);
  for (std::size_t i = 0; i < d; ++i) comb[i] = alpha * x[i] + beta * y[i];
  auto ap = [&](const Vector& v) { return adjoint ? op.adjoint(v) : op.forward(v); };
  const Vector lhs = ap(comb);
  Vector rhs = ap(x);
  const Vector ay = ap(y);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = alpha * rhs[i] + beta * ay[i];
  return oracle::rel_diff(lhs, rhs);
}

void check_operator_invariants(const LinearOperator& op) {
  for (std::uint64_t p = 0; p < 50; ++p) CHECK(adjoint_gap(op, 1000 + p) <= 1e-10);
  for (std::uint64_t p = 0; p < 5; ++p) {
    CHECK(linearity_gap(op, false, p) <= 1e-10);
    CHECK(linearity_gap(op, true, p) <= 1e-10);
  }
}

int reflect(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

/// Dense blur built pixel-by-pixel from the 2D kernel and mirrored indices.
DenseMatrix dense_blur(const ImageGrid& g, double variance) {
  const Vector k = gaussian_kernel_1d(variance);
  const int rad = static_cast<int>(k.size() / 2);
  const int h = static_cast<int>(g.height), w = static_cast<int>(g.width);
  DenseMatrix m(g.size(), g.size());
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int di = -rad; di <= rad; ++di)
        for (int dj = -rad; dj <= rad; ++dj)
          m(g.index(i, j), g.index(reflect(i + di, h), reflect(j + dj, w))) +=
              k[di + rad] * k[dj + rad];
  return m;
}

}  // namespace

TEST_CASE("vec and unvec use column stacking") {
  const ImageGrid g{2, 3};
  const DenseMatrix img = unvec(g, Vector{1, 2, 3, 4, 5, 6});
  CHECK(img(0, 0) == 1);
  CHECK(img(1, 0) == 2);
  CHECK(img(0, 1) == 3);
  CHECK(img(1, 2) == 6);
  CHECK(vec(img) == Vector{1, 2, 3, 4, 5, 6});
  CHECK(g.index(1, 2) == 5);
}

TEST_CASE("from_dense") {
  const LinearOperator id = from_dense(DenseMatrix::identity(2));
  CHECK(id.forward(Vector{3, -1}) == Vector{3, -1});

  const LinearOperator swap = from_dense(DenseMatrix::from_rows({{0, 1}, {1, 0}}));
  CHECK(swap.forward(Vector{1, 2}) == swap.adjoint(Vector{1, 2}));

  const LinearOperator r = from_dense(oracle::random_matrix(6, 4, 3));
  CHECK(r.matched());
  CHECK(asymmetry_measure(r, 50, 1) <= 1e-12);
  check_operator_invariants(r);
  CHECK(oracle::max_abs_diff(r.materialize_adjoint(), r.materialize().transposed()) == 0.0);
}

TEST_CASE("operator dimension checks") {
  const LinearOperator r = from_dense(oracle::random_matrix(6, 4, 3));
  CHECK_THROWS_AS(r.forward(Vector(6)), OperatorError);
  CHECK_THROWS_AS(r.adjoint(Vector(4)), OperatorError);
}

TEST_CASE("gaussian blur basic behaviour") {
  const ImageGrid g{8, 8};
  const LinearOperator blur = gaussian_blur(g, 0.25);
  CHECK(blur.matched());
  const Vector ones(64, 1.0);
  CHECK(oracle::rel_diff(blur.forward(ones), ones) < 1e-14);

  const Vector k = gaussian_kernel_1d(0.25);
  double sum = 0.0;
  for (double v : k) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k.size() == 5);  // radius ceil(4·0.5) = 2

  const LinearOperator tiny = gaussian_blur(g, 1e-8);
  const Vector x = oracle::random_vector(64, 4);
  CHECK(oracle::rel_diff(tiny.forward(x), x) < 1e-14);

  CHECK_THROWS_AS(gaussian_blur(g, 0.0), OperatorError);
  CHECK_THROWS_AS(gaussian_blur(g, -1.0), OperatorError);
}

TEST_CASE("gaussian blur matches the dense assembly oracle") {
  const ImageGrid g{8, 8};
  for (double variance : {0.25, 2.0, 9.0}) {
    const LinearOperator blur = gaussian_blur(g, variance);
    const DenseMatrix ref = dense_blur(g, variance);
    CHECK(oracle::max_abs_diff(blur.materialize(), ref) < 1e-12);
    CHECK(oracle::max_abs_diff(blur.materialize_adjoint(), ref.transposed()) < 1e-12);
  }
  // Impulse response column.
  const LinearOperator blur = gaussian_blur(g, 0.25);
  const DenseMatrix ref = dense_blur(g, 0.25);
  Vector e(64, 0.0);
  e[g.index(3, 5)] = 1.0;
  const Vector col = blur.forward(e);
  for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(col[i] - ref(i, g.index(3, 5))) < 1e-12);
}

TEST_CASE("gaussian blur zero boundary and rectangular grids stay adjoint-consistent") {
  check_operator_invariants(gaussian_blur({7, 11}, 1.3, BoundaryPolicy::zero));
  check_operator_invariants(gaussian_blur({12, 5}, 0.25));
}

TEST_CASE("subsample mask") {
  const ImageGrid g{8, 8};
  const LinearOperator full = subsample_mask(g, 1.0, 3);
  CHECK(full.rows() == 64);
  const Vector x = oracle::random_vector(64, 2);
  CHECK(full.forward(x) == x);

  const LinearOperator mask = subsample_mask(g, 0.8, 5);
  CHECK(mask.rows() == 52);  // ceil(0.8 · 64)
  const Vector back = mask.adjoint(mask.forward(x));
  std::size_t kept = 0;
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK((back[i] == x[i] || back[i] == 0.0));
    kept += back[i] != 0.0;
  }
  CHECK(kept == 52);
  const Vector y = oracle::random_vector(52, 9);
  CHECK(mask.forward(mask.adjoint(y)) == y);
  check_operator_invariants(mask);

  const auto idx = subsample_indices(g, 0.8, 5);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == idx.size());
  CHECK(subsample_indices(g, 0.8, 5) == idx);
  CHECK(subsample_indices(g, 0.8, 6) != idx);

  CHECK_THROWS_AS(subsample_mask(g, 0.0, 1), OperatorError);
  CHECK_THROWS_AS(subsample_mask(g, 1.5, 1), OperatorError);
}

TEST_CASE("compose") {
  const ImageGrid g{8, 8};
  const LinearOperator blur = gaussian_blur(g, 0.25);
  const LinearOperator mask = subsample_mask(g, 0.8, 5);
  const LinearOperator a = compose(mask, blur);
  CHECK(a.rows() == 52);
  CHECK(a.cols() == 64);
  CHECK(a.matched());
  const DenseMatrix ref = oracle::product(mask.materialize(), blur.materialize());
  CHECK(oracle::max_abs_diff(a.materialize(), ref) < 1e-14);
  check_operator_invariants(a);

  const LinearOperator same = compose(identity_operator(52), a);
  const Vector x = oracle::random_vector(64, 1);
  CHECK(oracle::rel_diff(same.forward(x), a.forward(x)) == 0.0);

  CHECK_THROWS_AS(compose(blur, mask), OperatorError);
}

TEST_CASE("ct projector: straight horizontal ray") {
  const ImageGrid g{16, 16};
  // One angle (θ = 0) gives horizontal rays; every ray crossing the grid
  // through a uniform unit image integrates to the width.
  const ParallelBeamGeometry geo{g, 1, 24};
  const SparseMatrix m = parallel_beam_matrix(geo);
  const Vector ones(g.size(), 1.0);
  Vector sino(m.rows);
  m.multiply(ones, sino);
  for (std::size_t r = 0; r < 24; ++r) {
    const double t = geo.offset(r);
    if (std::abs(t) < 8.0) CHECK(sino[r] == doctest::Approx(16.0).epsilon(1e-12));
    else CHECK(sino[r] == 0.0);
  }
}

TEST_CASE("ct projector matches Liang-Barsky per-pixel clipping") {
  const ImageGrid g{16, 16};
  const ParallelBeamGeometry geo{g, 12, 24};
  const DenseMatrix a = ct_parallel(g, 12, 24).materialize();
  REQUIRE(a.rows() == 288);
  double worst = 0.0;
  for (std::size_t ang = 0; ang < 12; ++ang) {
    const double th = geo.angle(ang);
    const double dx = std::cos(th), dy = std::sin(th);
    for (std::size_t r = 0; r < 24; ++r) {
      const double t = geo.offset(r);
      const double px = -t * dy, py = t * dx;
      for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j) {
          const double x0 = -8.0 + double(j), y1 = 8.0 - double(i);
          const double len = oracle::segment_in_box(px, py, dx, dy, x0, x0 + 1, y1 - 1, y1);
          worst = std::max(worst, std::abs(len - a(geo.row_of(ang, r), g.index(i, j))));
        }
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("ct projector row sums equal the chord through the grid box") {
  const ImageGrid g{20, 14};
  const ParallelBeamGeometry geo{g, 17, 31};
  const SparseMatrix m = parallel_beam_matrix(geo);
  const Vector ones(g.size(), 1.0);
  Vector sino(m.rows);
  m.multiply(ones, sino);
  for (std::size_t ang = 0; ang < 17; ++ang)
    for (std::size_t r = 0; r < 31; ++r) {
      const double th = geo.angle(ang), t = geo.offset(r);
      const double chord = oracle::segment_in_box(-t * std::sin(th), t * std::cos(th),
                                                  std::cos(th), std::sin(th), -7, 7, -10, 10);
      CHECK(std::abs(sino[geo.row_of(ang, r)] - chord) < 1e-10);
    }
}

TEST_CASE("ct projector symmetry under transposing the image") {
  // θ = 0 integrates along rows, θ = π/2 along columns; transposing the image
  // swaps them.
  const ImageGrid g{16, 16};
  const std::size_t n_rays = 24;
  const LinearOperator a = ct_parallel(g, 2, n_rays);
  DenseMatrix img(16, 16);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j)
      img(i, j) = std::exp(-0.05 * ((i - 6.0) * (i - 6.0) + (j - 9.0) * (j - 9.0))) +
                  (i > 10 && j < 4 ? 0.5 : 0.0);
  const Vector s = a.forward(vec(img));
  const Vector st = a.forward(vec(img.transposed()));
  for (std::size_t r = 0; r < n_rays; ++r)
    CHECK(std::abs(s[r] - st[n_rays + r]) < 1e-10);
}

TEST_CASE("ct operator invariants and errors") {
  const LinearOperator a = ct_parallel({16, 16}, 12, 24);
  CHECK(a.matched());
  check_operator_invariants(a);
  CHECK_THROWS_AS(ct_parallel({16, 16}, 0, 24), OperatorError);
  CHECK_THROWS_AS(ct_parallel({16, 16}, 12, 0), OperatorError);
}

TEST_CASE("perturb_adjoint calibration") {
  const LinearOperator a = ct_parallel({32, 32}, 30, 48);
  const LinearOperator same = perturb_adjoint(a, 0.0, 1);
  CHECK(same.matched());
  CHECK(asymmetry_measure(same, 100, 2) <= 1e-12);

  const LinearOperator p = perturb_adjoint(a, 4e-2, 1);
  CHECK_FALSE(p.matched());
  const double measured = asymmetry_measure(p, 100, 3);
  CHECK(measured >= 3.2e-2);
  CHECK(measured <= 4.8e-2);
  // Forward untouched.
  const Vector x = oracle::random_vector(a.cols(), 1);
  CHECK(p.forward(x) == a.forward(x));
  CHECK_THROWS_AS(perturb_adjoint(a, -1.0, 1), OperatorError);
  CHECK_THROWS_AS(perturb_adjoint(p, 1e-2, 1), OperatorError);
}

TEST_CASE("asymmetry_measure is linear in the perturbation size") {
  const DenseMatrix m = oracle::random_matrix(10, 8, 5);
  const DenseMatrix e = oracle::random_matrix(8, 10, 6);
  auto make = [&](double eps) {
    DenseMatrix at = m.transposed();
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 10; ++j) at(i, j) += eps * e(i, j);
    return LinearOperator(
        10, 8, [m](std::span<const double> x, std::span<double> y) {
          const Vector r = matvec(m, x);
          std::copy(r.begin(), r.end(), y.begin());
        },
        [at](std::span<const double> y, std::span<double> x) {
          const Vector r = matvec(at, y);
          std::copy(r.begin(), r.end(), x.begin());
        },
        false);
  };
  const double a1 = asymmetry_measure(make(1e-3), 200, 4);
  const double a2 = asymmetry_measure(make(2e-3), 200, 4);
  CHECK(a2 / a1 == doctest::Approx(2.0).epsilon(0.05));

  // Direct bilinear-form evaluation with the same probe stream.
  Rng rng(derive_seed(4, "asymmetry-probes"));
  double total = 0.0;
  for (int p = 0; p < 200; ++p) {
    const Vector x = unit_vector(10, rng), y = unit_vector(8, rng);
    double s = 0.0;
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 10; ++j) s += y[i] * 1e-3 * e(i, j) * x[j];
    total += std::abs(s);
  }
  CHECK(a1 == doctest::Approx(total / 200).epsilon(1e-9));
  CHECK_THROWS_AS(asymmetry_measure(make(0.0), 0, 1), OperatorError);
}
