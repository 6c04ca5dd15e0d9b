#include "sfk/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sfk/random.hpp"

namespace sfk {

namespace {

void finish_noise(Problem& p, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ProblemError("delta must be >= 0");
  const Vector e = scaled_noise(p.b_true, delta, derive_seed(p.seed, "noise"));
  p.b = p.b_true;
  axpy(1.0, e, p.b);
  p.delta = delta;
  p.delta_e = norm2(e);
}

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan parameters.
constexpr Ellipse kEllipses[10] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},         {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},     {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

void fill_block(DenseMatrix& img, double r0, double r1, double c0, double c1,
                double value) {
  const double n = double(img.rows());
  for (std::size_t j = 0; j < img.cols(); ++j) {
    const double v = (double(j) + 0.5) / n;
    if (v < c0 || v > c1) continue;
    for (std::size_t i = 0; i < img.rows(); ++i) {
      const double u = (double(i) + 0.5) / n;
      if (u >= r0 && u <= r1) img(i, j) += value;
    }
  }
}

}  // namespace

Vector scaled_noise(std::span<const double> b_true, double delta, std::uint64_t seed) {
  Vector e(b_true.size(), 0.0);
  if (delta == 0.0) return e;
  Rng rng(seed);
  e = unit_vector(b_true.size(), rng);
  scale(delta * norm2(b_true), e);
  return e;
}

Problem synthetic_decay(std::size_t m, std::size_t n, double rho, double delta,
                        std::uint64_t seed) {
  if (n == 0 || m < n) throw ProblemError("synthetic_decay needs m >= n >= 1");
  if (!(rho >= 1.0)) throw ProblemError("synthetic_decay needs rho >= 1");
  Rng left(derive_seed(seed, "left-factor")), right(derive_seed(seed, "right-factor"));
  DenseMatrix u = thin_qr(gaussian_matrix(m, n, left)).q;
  const DenseMatrix v = thin_qr(gaussian_matrix(n, n, right)).q;
  for (std::size_t j = 0; j < n; ++j) scale(std::pow(rho, -double(j)), u.col(j));
  DenseMatrix a = matmul(u, v.transposed());

  Problem p;
  p.name = "synthetic";
  p.seed = seed;
  p.x_true.assign(n, 1.0);
  p.b_true = matvec(a, p.x_true);
  const double c = 1.0 / norm2(p.b_true);
  scale(c, a.data());
  scale(c, p.b_true);
  p.a = from_dense(std::move(a));
  finish_noise(p, delta);
  return p;
}

double shepp_logan_value(double x, double y) {
  double v = 0.0;
  for (const Ellipse& e : kEllipses) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double dx = x - e.x0, dy = y - e.y0;
    const double xr = dx * std::cos(phi) + dy * std::sin(phi);
    const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
    if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.intensity;
  }
  return v;
}

DenseMatrix shepp_logan(std::size_t n) {
  if (n < 16) throw ProblemError("shepp_logan needs at least 16 pixels");
  DenseMatrix img(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double x = (2.0 * double(j) + 1.0) / double(n) - 1.0;
      const double y = 1.0 - (2.0 * double(i) + 1.0) / double(n);
      img(i, j) = std::clamp(shepp_logan_value(x, y), 0.0, 1.0);
    }
  return img;
}

DenseMatrix test_scene(std::size_t n) {
  if (n < 16) throw ProblemError("test_scene needs at least 16 pixels");
  DenseMatrix img(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (double(i) + 0.5) / double(n), v = (double(j) + 0.5) / double(n);
      img(i, j) = (0.6 + 0.4 * u) * (0.15 + 0.15 * v);
    }
  fill_block(img, 0.45, 0.90, 0.20, 0.80, 0.50);   // wall
  fill_block(img, 0.30, 0.45, 0.15, 0.85, 0.35);   // roof
  fill_block(img, 0.55, 0.68, 0.28, 0.42, -0.30);  // windows
  fill_block(img, 0.55, 0.68, 0.58, 0.72, -0.30);
  fill_block(img, 0.66, 0.90, 0.46, 0.55, -0.25);  // door
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (double(i) + 0.5) / double(n), v = (double(j) + 0.5) / double(n);
      if ((u - 0.14) * (u - 0.14) + (v - 0.82) * (v - 0.82) <= 0.07 * 0.07) img(i, j) += 0.4;
    }
  const double top = *std::max_element(img.data().begin(), img.data().end());
  scale(1.0 / top, img.data());
  return img;
}

std::size_t default_truncation_rank(std::size_t n) {
  return std::max<std::size_t>(4, std::size_t(std::lround(30.0 * double(n) / 512.0)));
}

Problem deblur_inpaint_problem(std::size_t n, double psf_variance,
                               double keep_fraction, double delta,
                               std::size_t rank_hint, std::uint64_t seed) {
  const ImageGrid grid{n, n};
  Problem p;
  p.name = "deblur";
  p.seed = seed;
  p.grid = grid;
  p.rank_hint = rank_hint == 0 ? default_truncation_rank(n) : rank_hint;
  p.a = compose(subsample_mask(grid, keep_fraction, derive_seed(seed, "mask")),
                gaussian_blur(grid, psf_variance));
  p.x_true = vec(test_scene(n));
  p.b_true = p.a.forward(p.x_true);
  finish_noise(p, delta);
  return p;
}

Problem ct_problem(std::size_t n, std::size_t n_angles, std::size_t n_rays,
                   double delta, double asymmetry, std::uint64_t seed) {
  const ImageGrid grid{n, n};
  Problem p;
  p.name = "ct";
  p.seed = seed;
  p.grid = grid;
  p.rank_hint = default_truncation_rank(n);
  p.a = ct_parallel(grid, n_angles, n_rays);
  if (asymmetry > 0.0) p.a = perturb_adjoint(p.a, asymmetry, derive_seed(seed, "adjoint"));
  else if (asymmetry < 0.0) throw ProblemError("asymmetry must be >= 0");
  p.x_true = vec(shepp_logan(n));
  p.b_true = p.a.forward(p.x_true);
  finish_noise(p, delta);
  return p;
}

void write_pgm(const std::string& path, const DenseMatrix& image, double lo, double hi) {
  if (image.empty()) throw ProblemError("write_pgm: empty image");
  if (lo == hi) {
    const auto [mn, mx] = std::minmax_element(image.data().begin(), image.data().end());
    lo = *mn;
    hi = *mx;
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ProblemError("cannot open " + path + " for writing");
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n65535\n";
  for (std::size_t i = 0; i < image.rows(); ++i)
    for (std::size_t j = 0; j < image.cols(); ++j) {
      const double t = std::clamp((image(i, j) - lo) / span, 0.0, 1.0);
      const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      out.put(char(v >> 8));
      out.put(char(v & 0xff));
    }
  if (!out) throw ProblemError("write failed: " + path);
}

DenseMatrix read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemError("cannot open " + path);
  auto token = [&in]() {
    std::string t;
    while (in >> t) {
      if (t[0] != '#') return t;
      std::getline(in, t);
    }
    throw ProblemError("truncated PGM header");
  };
  if (token() != "P5") throw ProblemError(path + ": not a binary PGM");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::logic_error&) {
    throw ProblemError(path + ": malformed PGM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535)
    throw ProblemError(path + ": bad PGM dimensions or maxval");
  in.get();
  DenseMatrix img(h, w);
  const bool wide = maxval > 255;
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      unsigned v = static_cast<unsigned char>(in.get());
      if (wide) v = (v << 8) | static_cast<unsigned char>(in.get());
      if (!in) throw ProblemError(path + ": truncated pixel data");
      img(i, j) = double(v) / double(maxval);
    }
  return img;
}

}  // namespace sfk
