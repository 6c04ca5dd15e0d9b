#pragma once

/// \file sfk/solvers.hpp
/// \brief LSQR/LSMR on Golub-Kahan bidiagonalization, their flexible
///        variants on the flexible Golub-Kahan process, and the sketched
///        flexible solvers sFLSQR/sFLSMR.
///
/// All solvers start from x₀ = 0 and return a SolveHistory holding
/// per-iteration residual/error curves and the final iterate.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfk/linalg.hpp"
#include "sfk/operators.hpp"
#include "sfk/sketch.hpp"
#include "sfk/truncate.hpp"

namespace sfk {

class SolverError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SolverKind { lsqr, lsmr, flsqr, flsmr, sflsqr, sflsmr };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

/// Which quantity the optional discrepancy stop is evaluated on.
enum class DiscrepancyTarget { true_residual, sketched_residual };

/// Which columns a new solution direction is orthogonalized against.
///  - modified: the τ-modified columns z_j (sFLSQR/sFLSMR pseudocode);
///  - raw: the unmodified directions p_j, which keeps P orthonormal under a
///    full window so that A♯W = P·T holds (used by FLSQR/FLSMR).
/// Both coincide when τ is the identity.
enum class DirectionBasis { modified, raw };

struct SolverConfig {
  std::size_t maxit = 50;
  /// Relative tolerance on the (sketched/projected) objective.
  double tol = 1e-12;
  /// Orthogonalization window ℓ; FLSQR/FLSMR always use a full window.
  std::size_t window = 2;
  TruncationOperator tau{};
  /// Required by sFLSQR (input dim m) and sFLSMR (input dim n).
  std::optional<SketchOperator> sketch;
  /// Discrepancy safety factor η > 1.
  double eta = 1.01;
  /// Noise norm ‖e‖₂; enables the discrepancy rule when set.
  std::optional<double> delta_e;
  bool stop_on_discrepancy = false;
  DiscrepancyTarget discrepancy_on = DiscrepancyTarget::true_residual;
  /// One extra forward apply per iteration; switch off for timing runs.
  bool track_true_residual = true;
  bool record_iterates = false;
  bool keep_basis = false;
  /// LSQR/LSMR only: fully reorthogonalize both Golub-Kahan bases instead of
  /// relying on the short recurrence alone.
  bool reorthogonalize = false;
  /// Overrides the default basis choice of the solver when set.
  std::optional<DirectionBasis> direction_basis;
};

struct SolveHistory {
  std::string solver;
  double b_norm = 0.0;
  /// Normalizer of the objective column (‖Sb‖, ‖SA♯b‖, ‖b‖ or ‖Aᵀb‖).
  double objective_ref = 0.0;
  /// Index k = 1..iterations() of entry k-1 below.
  std::vector<double> true_residual;  ///< ‖A x_k − b‖₂ (NaN if untracked)
  /// Objective value of the iteration's projected/sketched minimization.
  std::vector<double> sketched_residual;
  std::vector<double> error;          ///< ‖x_k − x_true‖/‖x_true‖ or NaN
  /// 1-based first iteration meeting the discrepancy rule, if any.
  std::optional<std::size_t> stop_iteration;
  std::string stop_reason = "maxit";
  bool breakdown = false;
  Vector x;
  std::vector<Vector> iterates;      ///< x_k when record_iterates
  std::vector<Vector> coefficients;  ///< y_k when record_iterates
  DenseMatrix basis;                 ///< solution basis when keep_basis

  std::size_t iterations() const noexcept { return sketched_residual.size(); }
  double relative_residual(std::size_t k) const {
    return true_residual.at(k - 1) / b_norm;
  }
};

/// Flexible Golub-Kahan process with windowed orthogonalization:
///   A Z_k = W_{k+1} H_{k+1,k},   Z_k = τ(P_k),
/// and A♯ w_j = T[j,j] p_j + Σ_{i<j} T[i,j] b_i with b_i = z_i (modified
/// basis) or p_i (raw basis). After k steps the next direction p_{k+1} and
/// column k+1 of T are already prepared.
class FgkProcess {
 public:
  enum class Status { ok, forward_breakdown, direction_breakdown };

  FgkProcess(const LinearOperator& a, std::span<const double> b,
             std::size_t window, TruncationOperator tau,
             DirectionBasis basis = DirectionBasis::modified);

  /// One step; appends z_k, w_{k+1} and column k of H, then prepares p_{k+1}.
  Status step();

  std::size_t steps() const noexcept { return z_.cols(); }
  std::size_t window() const noexcept { return window_; }
  double beta() const noexcept { return beta_; }
  Status status() const noexcept { return status_; }
  bool can_continue() const noexcept { return status_ == Status::ok; }

  const DenseMatrix& w() const noexcept { return w_; }  ///< m x (k+1)
  const DenseMatrix& z() const noexcept { return z_; }  ///< n x k
  const DenseMatrix& p() const noexcept { return p_; }  ///< n x (k+1)
  /// (k+1) x k upper Hessenberg, zero above the window band.
  DenseMatrix h() const;
  /// (k+1) x (k+1) upper triangular, zero above the window band.
  DenseMatrix t() const;
  double h_entry(std::size_t i, std::size_t j) const;  ///< 0-based
  double t_entry(std::size_t i, std::size_t j) const;  ///< 0-based

  /// A z_k before orthogonalization.
  const Vector& last_forward() const noexcept { return raw_forward_; }
  /// A♯ w_{k+1} before orthogonalization (A♯ w₁ before the first step).
  const Vector& last_adjoint() const noexcept { return raw_adjoint_; }

 private:
  void prepare_direction();
  bool negligible(double norm) const;

  const LinearOperator* a_;
  std::size_t window_;
  TruncationOperator tau_;
  DirectionBasis basis_;
  double beta_ = 0.0;
  double scale_ref_ = 0.0;
  Status status_ = Status::ok;
  DenseMatrix w_, z_, p_;
  std::vector<Vector> h_cols_;  // column k holds rows 0..k+1
  std::vector<Vector> t_cols_;  // column k holds rows 0..k
  Vector raw_forward_, raw_adjoint_;
};

/// A new basis vector counts as zero when its norm after orthogonalization is
/// at most kBreakdownTol·√max(m, n) times the largest raw vector norm seen.
inline constexpr double kBreakdownTol = 1e-14;
double breakdown_threshold(double scale_ref, std::size_t m, std::size_t n);

SolveHistory lsqr(const LinearOperator& a, std::span<const double> b,
                  const SolverConfig& cfg, std::span<const double> x_true = {});
SolveHistory lsmr(const LinearOperator& a, std::span<const double> b,
                  const SolverConfig& cfg, std::span<const double> x_true = {});
SolveHistory flsqr(const LinearOperator& a, std::span<const double> b,
                   const SolverConfig& cfg, std::span<const double> x_true = {});
SolveHistory flsmr(const LinearOperator& a, std::span<const double> b,
                   const SolverConfig& cfg, std::span<const double> x_true = {});
SolveHistory sflsqr(const LinearOperator& a, std::span<const double> b,
                    const SolverConfig& cfg, std::span<const double> x_true = {});
SolveHistory sflsmr(const LinearOperator& a, std::span<const double> b,
                    const SolverConfig& cfg, std::span<const double> x_true = {});

SolveHistory solve(SolverKind kind, const LinearOperator& a,
                   std::span<const double> b, const SolverConfig& cfg,
                   std::span<const double> x_true = {});

/// First 1-based k with ‖A x_k − b‖ ≤ η·δ_e, or nullopt.
std::optional<std::size_t> discrepancy_stop(std::span<const double> residuals,
                                            double eta, double delta_e);
std::optional<std::size_t> discrepancy_stop(const SolveHistory& history,
                                            double eta, double delta_e);

}  // namespace sfk
