#pragma once

/// \file sfk/analysis.hpp
/// \brief Optimal-in-subspace residuals, the deterministic residual bounds of
///        the sketched solvers, and a Monte Carlo check of the expected
///        sFLSQR residual under Gaussian sketches.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfk/linalg.hpp"
#include "sfk/operators.hpp"
#include "sfk/sketch.hpp"
#include "sfk/solvers.hpp"

namespace sfk {

class AnalysisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OptimalResidual {
  double r_opt = 0.0;
  Vector y_opt;
  /// Orthonormal basis of range(A·Z), m x rank.
  DenseMatrix q;
  bool rank_deficient = false;
};

/// min_y ‖A Z y − b‖₂ through a QR of the materialized A·Z. A rank-deficient
/// A·Z is flagged and handled with the minimum-norm minimizer.
OptimalResidual optimal_residual(const LinearOperator& a, const DenseMatrix& z,
                                 std::span<const double> b);
/// Same, for an already materialized A·Z.
OptimalResidual optimal_residual(const DenseMatrix& az, std::span<const double> b);

/// v − Q Qᵀ v
Vector project_out(const DenseMatrix& q, std::span<const double> v);

/// ‖(G Q)† G (I − Q Qᵀ)‖₂ for a dense s x m matrix G and orthonormal Q.
double pinv_leakage(const DenseMatrix& g, const DenseMatrix& q);

/// √(1 + ‖(SQ)† S Q_⊥‖₂²), the sFLSQR residual factor. S acts on R^m.
double bound_sflsqr(const SketchOperator& s, const DenseMatrix& q);

/// √(1 + ‖(SAᵀQ)† SAᵀ Q_⊥‖₂²), the sFLSMR residual factor. S acts on R^n.
/// Aᵀ is the exact transpose, obtained from forward applications only.
double bound_sflsmr(const SketchOperator& s, const LinearOperator& a,
                    const DenseMatrix& q);
/// Same with S·Aᵀ already materialized (s x m).
double bound_sflsmr_from(const DenseMatrix& sat, const DenseMatrix& q);

/// S·Aᵀ from s forward applications: row i is (A sᵢ)ᵀ with sᵢ row i of S.
DenseMatrix sketch_transpose(const SketchOperator& s, const LinearOperator& a);

struct BoundRow {
  std::size_t k = 0;
  double r_opt = 0.0;
  double r_sflsqr = 0.0;
  double r_sflsmr = 0.0;
  double factor1 = 0.0;
  double factor2 = 0.0;
  double bound1 = 0.0;
  double bound2 = 0.0;
  bool bound1_ok = false;
  bool bound2_ok = false;
  bool optimal_ok = false;
};

struct BoundReport {
  double b_norm = 0.0;
  double slack = 0.0;
  std::vector<BoundRow> rows;

  std::size_t violations() const;
};

/// Runs sFLSQR (sketch s_m on R^m) and sFLSMR (sketch s_n on R^n) from the
/// same configuration and evaluates both bounds on their common subspace.
/// Comparisons allow `slack`·‖b‖ of rounding.
BoundReport bound_report(const LinearOperator& a, std::span<const double> b,
                         const SolverConfig& cfg, const SketchOperator& s_m,
                         const SketchOperator& s_n, double slack = 1e-9);

struct CorollaryResult {
  std::size_t k = 0;
  std::size_t s = 0;
  std::size_t trials = 0;
  double r_opt = 0.0;
  double empirical_mean = 0.0;   ///< mean of squared sFLSQR residuals
  double standard_error = 0.0;   ///< of the mean
  double factor_stated = 0.0;    ///< 1 + s/(s − k − 1)
  double factor_exact = 0.0;     ///< 1 + k/(s − k − 1)
  double predicted = 0.0;        ///< r_opt² · factor_stated
  double predicted_exact = 0.0;  ///< r_opt² · factor_exact

  double rel_err() const { return std::abs(empirical_mean - predicted) / predicted; }
  double rel_err_exact() const {
    return std::abs(empirical_mean - predicted_exact) / predicted_exact;
  }
};

/// Mean over `n_trials` fresh Gaussian sketches of ‖b − A Z y_S‖², where
/// y_S = argmin ‖S(A Z y − b)‖. `scale` is passed to gaussian_sketch.
CorollaryResult corollary_check(const LinearOperator& a, const DenseMatrix& z,
                                std::span<const double> b, std::size_t s,
                                std::size_t n_trials, std::uint64_t seed,
                                double scale = 1.0);

}  // namespace sfk
