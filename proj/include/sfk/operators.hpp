#pragma once

/// \file sfk/operators.hpp
/// \brief Matrix-free linear operators with a forward map and a (possibly
///        unmatched) adjoint, plus the imaging operators used in experiments.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include "sfk/linalg.hpp"

namespace sfk {

class OperatorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Image dimensions. Images are vectorized by column stacking: pixel
/// (row i, col j) is entry i + j * height.
struct ImageGrid {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return height * width; }
  std::size_t index(std::size_t row, std::size_t col) const noexcept {
    return row + col * height;
  }
  bool operator==(const ImageGrid&) const = default;
};

/// Reshape helpers for the column-stacking convention.
DenseMatrix unvec(const ImageGrid& grid, std::span<const double> v);
Vector vec(const DenseMatrix& image);

/// Linear map R^n -> R^m with adjoint R^m -> R^n. Immutable and cheap to
/// copy; applications are reentrant.
class LinearOperator {
 public:
  /// out has length rows(), in has length cols() (for forward).
  using Apply = std::function<void(std::span<const double>, std::span<double>)>;

  LinearOperator() = default;
  LinearOperator(std::size_t rows, std::size_t cols, Apply forward,
                 Apply adjoint, bool matched, std::string name = "operator");

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  /// True iff adjoint() is the exact transpose of forward().
  bool matched() const noexcept { return matched_; }
  const std::string& name() const noexcept { return name_; }

  Vector forward(std::span<const double> x) const;
  Vector adjoint(std::span<const double> y) const;
  void forward(std::span<const double> x, std::span<double> out) const;
  void adjoint(std::span<const double> y, std::span<double> out) const;

  /// Dense copy of the forward map (cols() applications).
  DenseMatrix materialize() const;
  /// Dense copy of the adjoint map (rows() applications).
  DenseMatrix materialize_adjoint() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::shared_ptr<const Apply> forward_;
  std::shared_ptr<const Apply> adjoint_;
  bool matched_ = true;
  std::string name_;
};

/// Compressed sparse row matrix; the CT projector and the adjoint
/// perturbation are stored this way.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col_idx;
  Vector values;

  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y = Mᵀ x
  void multiply_transposed(std::span<const double> x, std::span<double> y) const;
  std::size_t nnz() const noexcept { return values.size(); }
};

LinearOperator identity_operator(std::size_t n);
LinearOperator from_dense(DenseMatrix m);
LinearOperator from_sparse(std::shared_ptr<const SparseMatrix> m,
                           std::string name = "sparse");

enum class BoundaryPolicy { reflexive, zero };

/// Separable Gaussian blur; kernel truncated at 4 standard deviations and
/// normalized to unit sum. Adjoint is the exact transpose.
LinearOperator gaussian_blur(const ImageGrid& grid, double variance,
                             BoundaryPolicy boundary = BoundaryPolicy::reflexive);

/// 1D normalized Gaussian weights for offsets -radius..radius.
Vector gaussian_kernel_1d(double variance);

/// Keeps ceil(keep_fraction * n) pixels chosen by a seeded permutation.
LinearOperator subsample_mask(const ImageGrid& grid, double keep_fraction,
                              std::uint64_t seed);
/// Sorted kept indices of the mask built with the same arguments.
std::vector<std::size_t> subsample_indices(const ImageGrid& grid,
                                           double keep_fraction,
                                           std::uint64_t seed);

/// outer ∘ inner
LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner);

/// Parallel-beam ray geometry over a grid with unit pixels centred at the
/// origin. Angle a is a·π/n_angles; ray r sits at offset
/// −D/2 + (r + ½)·D/n_rays along the detector, D the grid diagonal.
struct ParallelBeamGeometry {
  ImageGrid grid;
  std::size_t n_angles = 0;
  std::size_t n_rays = 0;

  double angle(std::size_t a) const;
  double offset(std::size_t r) const;
  std::size_t row_of(std::size_t a, std::size_t r) const { return a * n_rays + r; }
};

/// Intersection-length projector assembled by grid-line traversal.
SparseMatrix parallel_beam_matrix(const ParallelBeamGeometry& geometry);
LinearOperator ct_parallel(const ImageGrid& grid, std::size_t n_angles,
                           std::size_t n_rays);

/// Replaces the adjoint with Aᵀ + E, E a seeded sparse random matrix scaled
/// so the mean asymmetry over random unit probes matches asymmetry_target.
LinearOperator perturb_adjoint(const LinearOperator& op, double asymmetry_target,
                               std::uint64_t seed);

/// Mean over probes of |xᵀ(A y) − yᵀ(A♯ x)| for x, y uniform on unit spheres.
double asymmetry_measure(const LinearOperator& op, std::size_t n_probes,
                         std::uint64_t seed);

}  // namespace sfk
