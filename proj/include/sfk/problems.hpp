#pragma once

/// \file sfk/problems.hpp
/// \brief Test problems: synthetic decaying-spectrum systems, deblurring with
///        inpainting, desk-scale CT with an unmatched adjoint, phantoms and
///        16-bit PGM image files.

#include <cstdint>
#include <optional>
#include <string>

#include "sfk/linalg.hpp"
#include "sfk/operators.hpp"

namespace sfk {

class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Problem {
  std::string name;
  LinearOperator a;
  Vector b;
  Vector b_true;
  Vector x_true;  ///< empty when unknown
  /// Set for image problems; x is vectorized on this grid.
  std::optional<ImageGrid> grid;
  double delta = 0.0;    ///< ‖e‖ / ‖A x_true‖
  double delta_e = 0.0;  ///< ‖e‖
  std::uint64_t seed = 0;
  /// Suggested truncation rank for image problems (0 when not applicable).
  std::size_t rank_hint = 0;
};

/// Noise e with ‖e‖ = delta·‖b_true‖ exactly, Gaussian direction.
Vector scaled_noise(std::span<const double> b_true, double delta, std::uint64_t seed);

/// A = U diag(ρ^{1−i}) Vᵀ with Haar-like orthonormal factors, x_true = ones,
/// scaled so that ‖b_true‖ = 1 (δ_e = δ then).
Problem synthetic_decay(std::size_t m, std::size_t n, double rho, double delta,
                        std::uint64_t seed);

/// Modified Shepp-Logan phantom (ten ellipses, Toft's intensities), values
/// in [0, 1]. Row 0 is the top of the image.
DenseMatrix shepp_logan(std::size_t n);

/// Intensity of the phantom at (x, y) ∈ [−1, 1]², y pointing up, before
/// clipping.
double shepp_logan_value(double x, double y);

/// Low-rank-plus-smooth test scene: a few rectangular blocks, a separable
/// shaded background and a small disc. Values in [0, 1].
DenseMatrix test_scene(std::size_t n);

/// A = mask ∘ blur on an n x n scene.
Problem deblur_inpaint_problem(std::size_t n, double psf_variance,
                               double keep_fraction, double delta,
                               std::size_t rank_hint, std::uint64_t seed);

/// Parallel-beam CT of the Shepp-Logan phantom; asymmetry > 0 replaces the
/// adjoint by a perturbed one.
Problem ct_problem(std::size_t n, std::size_t n_angles, std::size_t n_rays,
                   double delta, double asymmetry, std::uint64_t seed);

/// round(30·n/512), at least 4.
std::size_t default_truncation_rank(std::size_t n);

/// Binary PGM, P5, maxval 65535. Values are mapped linearly from [lo, hi]
/// and clipped; lo == hi uses the image range.
void write_pgm(const std::string& path, const DenseMatrix& image,
               double lo = 0.0, double hi = 0.0);
/// Reads 8- or 16-bit P5 files; returns values divided by maxval.
DenseMatrix read_pgm(const std::string& path);

}  // namespace sfk
