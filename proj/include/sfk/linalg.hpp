#pragma once

/// \file sfk/linalg.hpp
/// \brief Small dense kernels: column-major matrices, pivoted Householder
///        least squares, Golub-Kahan-Reinsch SVD and randomized SVD.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace sfk {

using Vector = std::vector<double>;

/// Thrown for shape mismatches, invalid parameters and non-finite input.
class LinalgError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense real matrix stored column-major: entry (i, j) lives at i + j * rows.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, Vector column_major);

  static DenseMatrix identity(std::size_t n);
  /// Builds from row-major nested lists; convenient for small literals.
  static DenseMatrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i + j * rows_];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i + j * rows_];
  }

  std::span<double> col(std::size_t j) noexcept {
    return {data_.data() + j * rows_, rows_};
  }
  std::span<const double> col(std::size_t j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  const Vector& data() const noexcept { return data_; }
  Vector& data() noexcept { return data_; }

  DenseMatrix transposed() const;
  /// Leading block of the first `ncols` columns.
  DenseMatrix left_cols(std::size_t ncols) const;
  void append_col(std::span<const double> column);

  bool all_finite() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

// --- BLAS-1/2 style helpers ------------------------------------------------

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);
bool all_finite(std::span<const double> x) noexcept;

Vector matvec(const DenseMatrix& m, std::span<const double> x);
Vector matvec_transposed(const DenseMatrix& m, std::span<const double> x);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_norm(const DenseMatrix& m);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);

// --- factorizations --------------------------------------------------------

/// Thin Householder QR of a tall matrix (rows >= cols), no pivoting.
struct ThinQr {
  DenseMatrix q;  ///< rows x cols, orthonormal columns
  DenseMatrix r;  ///< cols x cols, upper triangular
};
ThinQr thin_qr(const DenseMatrix& m);

struct SvdFactors {
  DenseMatrix u;   ///< rows x p, orthonormal columns
  Vector sigma;    ///< p values, nonincreasing, nonnegative
  DenseMatrix vt;  ///< p x cols, orthonormal rows
  // p = min(rows, cols) for svd(); <= requested rank for randomized_svd().

  DenseMatrix reconstruct() const;
  /// Keeps the leading `rank` triplets.
  SvdFactors truncated(std::size_t rank) const;
};

/// Minimizer of ‖m y − rhs‖₂. Rank-deficient systems (pivot magnitude below
/// 1e-12·‖m‖) get the minimum-norm minimizer through a complete orthogonal
/// decomposition.
Vector least_squares(const DenseMatrix& m, std::span<const double> rhs);

/// Numerical rank estimate from the same pivoted QR used by least_squares.
std::size_t numerical_rank(const DenseMatrix& m, double rel_tol = 1e-12);

/// Full thin SVD (Householder bidiagonalization + implicit shifted QR).
SvdFactors svd(const DenseMatrix& m);

/// Largest singular value only; same algorithm as svd() without vectors.
double spectral_norm(const DenseMatrix& m);

struct RandomizedSvdParams {
  std::size_t oversample = 5;
  std::size_t power_iters = 1;
  std::uint64_t seed = 0;
};

/// Range-finder randomized SVD with Gaussian test matrix and power
/// iterations re-orthonormalized at each pass. Returns rank-`rank` factors.
SvdFactors randomized_svd(const DenseMatrix& m, std::size_t rank,
                          const RandomizedSvdParams& params = {});

}  // namespace sfk
