#include "sfk/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfk {

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::lsqr: return "lsqr";
    case SolverKind::lsmr: return "lsmr";
    case SolverKind::flsqr: return "flsqr";
    case SolverKind::flsmr: return "flsmr";
    case SolverKind::sflsqr: return "sflsqr";
    case SolverKind::sflsmr: return "sflsmr";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(const std::string& name) {
  for (SolverKind k : {SolverKind::lsqr, SolverKind::lsmr, SolverKind::flsqr,
                       SolverKind::flsmr, SolverKind::sflsqr, SolverKind::sflsmr})
    if (to_string(k) == name) return k;
  throw SolverError("unknown solver '" + name + "'");
}

double breakdown_threshold(double scale_ref, std::size_t m, std::size_t n) {
  return kBreakdownTol * std::sqrt(static_cast<double>(std::max(m, n))) * scale_ref;
}

// --- flexible Golub-Kahan ----------------------------------------------------

FgkProcess::FgkProcess(const LinearOperator& a, std::span<const double> b,
                       std::size_t window, TruncationOperator tau,
                       DirectionBasis basis)
    : a_(&a), window_(window), tau_(std::move(tau)), basis_(basis),
      w_(a.rows(), 0), z_(a.cols(), 0), p_(a.cols(), 0) {
  if (b.size() != a.rows()) throw SolverError("fgk: b length does not match A");
  if (window == 0) throw SolverError("fgk: window must be >= 1");
  if (!all_finite(b)) throw SolverError("fgk: b has non-finite entries");
  beta_ = norm2(b);
  if (beta_ == 0.0) throw SolverError("fgk: b is zero");
  Vector w1(b.begin(), b.end());
  scale(1.0 / beta_, w1);
  w_.append_col(w1);
  raw_adjoint_ = a.adjoint(w1);
  prepare_direction();
}

bool FgkProcess::negligible(double norm) const {
  return !(norm > breakdown_threshold(scale_ref_, a_->rows(), a_->cols()));
}

// Orthogonalizes the pending adjoint image against the window and stores
// p_{k+1} together with column k+1 of T.
void FgkProcess::prepare_direction() {
  const std::size_t k = steps();  // next direction has 1-based index k+1
  scale_ref_ = std::max(scale_ref_, norm2(raw_adjoint_));
  Vector z = raw_adjoint_;
  Vector tcol(k + 1, 0.0);
  const std::size_t first = k > window_ ? k - window_ : 0;
  const DenseMatrix& against = basis_ == DirectionBasis::modified ? z_ : p_;
  for (std::size_t j = first; j < k; ++j) {
    tcol[j] = dot(against.col(j), z);
    axpy(-tcol[j], against.col(j), z);
  }
  const double nz = norm2(z);
  tcol[k] = nz;
  if (negligible(nz)) {
    status_ = Status::direction_breakdown;
    std::fill(z.begin(), z.end(), 0.0);
  } else {
    scale(1.0 / nz, z);
  }
  p_.append_col(z);
  t_cols_.push_back(std::move(tcol));
}

FgkProcess::Status FgkProcess::step() {
  if (status_ != Status::ok) throw SolverError("fgk: step after breakdown");
  const std::size_t k = steps();  // 0-based index of the new column
  const Vector zk = tau_.apply(p_.col(k), k + 1);
  z_.append_col(zk);

  raw_forward_ = a_->forward(zk);
  scale_ref_ = std::max(scale_ref_, norm2(raw_forward_));
  Vector w = raw_forward_;
  Vector hcol(k + 2, 0.0);
  const std::size_t first = k > window_ ? k - window_ : 0;
  for (std::size_t j = first; j <= k; ++j) {
    hcol[j] = dot(w_.col(j), w);
    axpy(-hcol[j], w_.col(j), w);
  }
  const double nw = norm2(w);
  hcol[k + 1] = nw;
  h_cols_.push_back(std::move(hcol));
  if (negligible(nw)) {
    status_ = Status::forward_breakdown;
    h_cols_.back()[k + 1] = 0.0;
    std::fill(w.begin(), w.end(), 0.0);
    w_.append_col(w);
    raw_adjoint_.assign(a_->cols(), 0.0);
    return status_;
  }
  scale(1.0 / nw, w);
  w_.append_col(w);
  raw_adjoint_ = a_->adjoint(w);
  prepare_direction();
  return status_;
}

double FgkProcess::h_entry(std::size_t i, std::size_t j) const {
  const Vector& c = h_cols_.at(j);
  return i < c.size() ? c[i] : 0.0;
}

double FgkProcess::t_entry(std::size_t i, std::size_t j) const {
  const Vector& c = t_cols_.at(j);
  return i < c.size() ? c[i] : 0.0;
}

DenseMatrix FgkProcess::h() const {
  const std::size_t k = steps();
  DenseMatrix out(k + 1, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < h_cols_[j].size(); ++i) out(i, j) = h_cols_[j][i];
  return out;
}

DenseMatrix FgkProcess::t() const {
  const std::size_t k = t_cols_.size();
  DenseMatrix out(k, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < t_cols_[j].size(); ++i) out(i, j) = t_cols_[j][i];
  return out;
}

// --- shared driver pieces ----------------------------------------------------

namespace {

void validate(const LinearOperator& a, std::span<const double> b,
              const SolverConfig& cfg, std::span<const double> x_true) {
  if (cfg.maxit == 0) throw SolverError("solver: maxit must be >= 1");
  if (cfg.window == 0) throw SolverError("solver: window must be >= 1");
  if (!(cfg.tol >= 0.0)) throw SolverError("solver: tol must be >= 0");
  if (b.size() != a.rows()) throw SolverError("solver: b length does not match A");
  if (!x_true.empty() && x_true.size() != a.cols())
    throw SolverError("solver: x_true length does not match A");
  if (!all_finite(b)) throw SolverError("solver: b has non-finite entries");
  if (norm2(b) == 0.0) throw SolverError("solver: b is zero");
  if (cfg.delta_e) {
    if (!(*cfg.delta_e >= 0.0)) throw SolverError("solver: delta_e must be >= 0");
    if (!(cfg.eta > 1.0)) throw SolverError("solver: eta must be > 1");
  }
  if (cfg.tau.kind() != TruncationKind::identity && cfg.tau.grid().size() != a.cols())
    throw SolverError("solver: truncation grid does not match the unknowns");
}

void require_matched(const LinearOperator& a, const char* who) {
  if (!a.matched())
    throw SolverError(std::string(who) +
                      ": operator has an unmatched adjoint; use a flexible solver");
}

Vector combine(const DenseMatrix& basis, std::span<const double> y) {
  Vector x(basis.rows(), 0.0);
  for (std::size_t j = 0; j < y.size(); ++j) axpy(y[j], basis.col(j), x);
  return x;
}

/// Per-iteration bookkeeping common to all solvers.
class Recorder {
 public:
  Recorder(const LinearOperator& a, std::span<const double> b,
           const SolverConfig& cfg, std::span<const double> x_true,
           SolveHistory& h, bool objective_is_residual)
      : a_(a), b_(b), cfg_(cfg), x_true_(x_true), h_(h) {
    h_.b_norm = norm2(b);
    if (!x_true.empty()) xt_norm_ = norm2(x_true);
    if (cfg.delta_e && cfg.discrepancy_on == DiscrepancyTarget::sketched_residual &&
        !objective_is_residual)
      throw SolverError(h.solver +
                        ": discrepancy on the sketched residual needs a "
                        "residual-type objective (lsqr, flsqr, sflsqr)");
    need_x_ = cfg.track_true_residual || cfg.record_iterates || !x_true.empty() ||
              (cfg.delta_e && cfg.discrepancy_on == DiscrepancyTarget::true_residual);
  }

  /// Records iteration k = basis columns used by y; returns true to stop.
  bool record(const DenseMatrix& basis, const Vector& y, double objective) {
    const std::size_t k = y.size();
    last_y_ = y;
    last_basis_ = &basis;
    h_.sketched_residual.push_back(objective);
    double res = std::numeric_limits<double>::quiet_NaN();
    double err = std::numeric_limits<double>::quiet_NaN();
    Vector x;
    if (need_x_) {
      x = combine(basis, y);
      if (cfg_.track_true_residual ||
          (cfg_.delta_e && cfg_.discrepancy_on == DiscrepancyTarget::true_residual)) {
        Vector r = a_.forward(x);
        axpy(-1.0, b_, r);
        res = norm2(r);
      }
      if (!x_true_.empty()) {
        Vector d = x;
        axpy(-1.0, x_true_, d);
        err = norm2(d) / xt_norm_;
      }
    }
    h_.true_residual.push_back(res);
    h_.error.push_back(err);
    if (cfg_.record_iterates) {
      h_.iterates.push_back(x);
      h_.coefficients.push_back(y);
    }

    if (cfg_.delta_e && !h_.stop_iteration) {
      const double v =
          cfg_.discrepancy_on == DiscrepancyTarget::true_residual ? res : objective;
      if (v <= cfg_.eta * *cfg_.delta_e) {
        h_.stop_iteration = k;
        if (cfg_.stop_on_discrepancy) {
          h_.stop_reason = "discrepancy";
          h_.x = need_x_ ? std::move(x) : combine(basis, y);
          done_ = true;
          return true;
        }
      }
    }
    if (objective <= cfg_.tol * h_.objective_ref) {
      h_.stop_reason = "tolerance";
      return true;
    }
    return false;
  }

  void finish(const DenseMatrix& basis) {
    if (cfg_.keep_basis) h_.basis = basis;
    if (done_) return;
    if (last_basis_ == nullptr) {
      h_.x.assign(a_.cols(), 0.0);
      return;
    }
    h_.x = combine(basis, last_y_);
  }

 private:
  const LinearOperator& a_;
  std::span<const double> b_;
  const SolverConfig& cfg_;
  std::span<const double> x_true_;
  SolveHistory& h_;
  double xt_norm_ = 1.0;
  bool need_x_ = true;
  bool done_ = false;
  Vector last_y_;
  const DenseMatrix* last_basis_ = nullptr;
};

Vector residual_of(const DenseMatrix& m, const Vector& y, std::span<const double> rhs) {
  Vector r = matvec(m, y);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
  return r;
}

void mark_breakdown(SolveHistory& h) {
  h.breakdown = true;
  if (h.stop_reason == "maxit") h.stop_reason = "breakdown";
}

// --- Golub-Kahan bidiagonalization (LSQR / LSMR) ----------------------------

void orthogonalize_against(const DenseMatrix& basis, std::span<double> v) {
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t j = 0; j < basis.cols(); ++j) axpy(-dot(basis.col(j), v), basis.col(j), v);
}

SolveHistory gkb_solver(const LinearOperator& a, std::span<const double> b,
                        const SolverConfig& cfg, std::span<const double> x_true,
                        bool minres_form) {
  validate(a, b, cfg, x_true);
  require_matched(a, minres_form ? "lsmr" : "lsqr");
  SolveHistory h;
  h.solver = minres_form ? "lsmr" : "lsqr";
  const auto negligible = [&](double v, double ref) {
    return v <= breakdown_threshold(ref, a.rows(), a.cols());
  };

  const double beta1 = norm2(b);
  Vector u(b.begin(), b.end());
  scale(1.0 / beta1, u);
  DenseMatrix ubasis(a.rows(), 0);  // kept only when reorthogonalizing
  if (cfg.reorthogonalize) ubasis.append_col(u);
  Vector v = a.adjoint(u);
  double scale_ref = norm2(v);
  double alpha = scale_ref;
  std::vector<double> alphas{alpha}, betas;  // betas[k] = β_{k+2}
  DenseMatrix vbasis(a.cols(), 0);
  h.objective_ref = minres_form ? alpha * beta1 : beta1;

  Recorder rec(a, b, cfg, x_true, h, !minres_form);
  if (alpha == 0.0) {
    // Aᵀb = 0: x = 0 already minimizes.
    mark_breakdown(h);
    rec.finish(vbasis);
    return h;
  }
  scale(1.0 / alpha, v);
  vbasis.append_col(v);

  for (std::size_t k = 1; k <= cfg.maxit; ++k) {
    // β_{k+1} u_{k+1} = A v_k − α_k u_k
    Vector un = a.forward(vbasis.col(k - 1));
    scale_ref = std::max(scale_ref, norm2(un));
    axpy(-alphas[k - 1], u, un);
    if (cfg.reorthogonalize) orthogonalize_against(ubasis, un);
    double beta = norm2(un);
    const bool forward_breakdown = negligible(beta, scale_ref);
    if (forward_breakdown) beta = 0.0;
    betas.push_back(beta);

    // α_{k+1} v_{k+1} = Aᵀ u_{k+1} − β_{k+1} v_k
    double alpha_next = 0.0;
    Vector vn;
    if (!forward_breakdown) {
      scale(1.0 / beta, un);
      u = std::move(un);
      if (cfg.reorthogonalize) ubasis.append_col(u);
      vn = a.adjoint(u);
      scale_ref = std::max(scale_ref, norm2(vn));
      axpy(-beta, vbasis.col(k - 1), vn);
      if (cfg.reorthogonalize) orthogonalize_against(vbasis, vn);
      alpha_next = norm2(vn);
      if (negligible(alpha_next, scale_ref)) alpha_next = 0.0;
    }

    // B_{k+1,k}: diag α_1..α_k, subdiag β_2..β_{k+1}
    DenseMatrix bk(k + 1, k);
    for (std::size_t j = 0; j < k; ++j) {
      bk(j, j) = alphas[j];
      bk(j + 1, j) = betas[j];
    }
    Vector y;
    double objective;
    if (!minres_form) {
      Vector rhs(k + 1, 0.0);
      rhs[0] = beta1;
      y = least_squares(bk, rhs);
      objective = norm2(residual_of(bk, y, rhs));
    } else {
      // B_{k+1}ᵀ B_{k+1,k} y ≈ α₁β₁ e₁ with B_{k+1} lower bidiagonal.
      DenseMatrix bsq(k + 1, k + 1);
      for (std::size_t j = 0; j <= k; ++j) {
        bsq(j, j) = j < k ? alphas[j] : alpha_next;
        if (j < k) bsq(j + 1, j) = betas[j];
      }
      const DenseMatrix m = matmul_tn(bsq, bk);
      Vector rhs(k + 1, 0.0);
      rhs[0] = alphas[0] * beta1;
      y = least_squares(m, rhs);
      // ‖B_{k+1}ᵀ(β₁e₁ − B_{k+1,k} y)‖, including the last row of B_{k+1}ᵀ.
      Vector r(k + 1, 0.0);
      r[0] = beta1;
      const Vector by = matvec(bk, y);
      for (std::size_t i = 0; i <= k; ++i) r[i] -= by[i];
      objective = norm2(matvec_transposed(bsq, r));
    }
    if (rec.record(vbasis, y, objective)) break;
    if (forward_breakdown || alpha_next == 0.0) {
      mark_breakdown(h);
      break;
    }
    if (k == cfg.maxit) break;
    scale(1.0 / alpha_next, vn);
    vbasis.append_col(vn);
    alphas.push_back(alpha_next);
  }
  rec.finish(vbasis);
  return h;
}

// --- flexible solvers --------------------------------------------------------

enum class Projection { qr_form, minres_form };

SolveHistory flexible_solver(const LinearOperator& a, std::span<const double> b,
                             const SolverConfig& cfg, std::span<const double> x_true,
                             Projection form) {
  validate(a, b, cfg, x_true);
  SolveHistory h;
  h.solver = form == Projection::qr_form ? "flsqr" : "flsmr";
  const DirectionBasis basis = cfg.direction_basis.value_or(DirectionBasis::raw);
  FgkProcess fgk(a, b, std::max(cfg.maxit, cfg.window), cfg.tau, basis);
  const double beta = fgk.beta();
  h.objective_ref = form == Projection::qr_form ? beta : beta * fgk.t_entry(0, 0);
  Recorder rec(a, b, cfg, x_true, h, form == Projection::qr_form);

  for (std::size_t k = 1; k <= cfg.maxit && fgk.can_continue(); ++k) {
    fgk.step();
    const DenseMatrix hk = fgk.h();
    Vector rhs(k + 1, 0.0);
    rhs[0] = beta;
    Vector y;
    double objective;
    if (form == Projection::qr_form) {
      y = least_squares(hk, rhs);
      objective = norm2(residual_of(hk, y, rhs));
    } else {
      // A♯(b − A Z y) = P_{k+1} T_{k+1} (β e₁ − H y)
      DenseMatrix tk = fgk.t();  // (k+1) x (k+1) unless the forward step broke down
      if (tk.cols() < k + 1) {
        DenseMatrix padded(k + 1, k + 1);
        for (std::size_t j = 0; j < tk.cols(); ++j)
          for (std::size_t i = 0; i <= j; ++i) padded(i, j) = tk(i, j);
        tk = std::move(padded);
      }
      const DenseMatrix m = matmul(tk, hk);
      const Vector trhs = matvec(tk, rhs);
      y = least_squares(m, trhs);
      objective = norm2(residual_of(m, y, trhs));
    }
    if (rec.record(fgk.z(), y, objective)) break;
    if (!fgk.can_continue()) mark_breakdown(h);
  }
  rec.finish(fgk.z());
  return h;
}

const SketchOperator& require_sketch(const SolverConfig& cfg, std::size_t dim,
                                     const char* who) {
  if (!cfg.sketch) throw SolverError(std::string(who) + ": a sketch is required");
  if (cfg.sketch->cols() != dim)
    throw SolverError(std::string(who) + ": sketch input dimension mismatch");
  return *cfg.sketch;
}

}  // namespace

SolveHistory lsqr(const LinearOperator& a, std::span<const double> b,
                  const SolverConfig& cfg, std::span<const double> x_true) {
  return gkb_solver(a, b, cfg, x_true, false);
}

SolveHistory lsmr(const LinearOperator& a, std::span<const double> b,
                  const SolverConfig& cfg, std::span<const double> x_true) {
  return gkb_solver(a, b, cfg, x_true, true);
}

SolveHistory flsqr(const LinearOperator& a, std::span<const double> b,
                   const SolverConfig& cfg, std::span<const double> x_true) {
  return flexible_solver(a, b, cfg, x_true, Projection::qr_form);
}

SolveHistory flsmr(const LinearOperator& a, std::span<const double> b,
                   const SolverConfig& cfg, std::span<const double> x_true) {
  return flexible_solver(a, b, cfg, x_true, Projection::minres_form);
}

SolveHistory sflsqr(const LinearOperator& a, std::span<const double> b,
                    const SolverConfig& cfg, std::span<const double> x_true) {
  validate(a, b, cfg, x_true);
  const SketchOperator& s = require_sketch(cfg, a.rows(), "sflsqr");
  SolveHistory h;
  h.solver = "sflsqr";
  FgkProcess fgk(a, b, cfg.window, cfg.tau,
                 cfg.direction_basis.value_or(DirectionBasis::modified));
  const Vector sb = s.apply(b);
  h.objective_ref = norm2(sb);
  Recorder rec(a, b, cfg, x_true, h, true);
  DenseMatrix saz(s.rows(), 0);

  for (std::size_t k = 1; k <= cfg.maxit && fgk.can_continue(); ++k) {
    fgk.step();
    saz.append_col(s.apply(fgk.last_forward()));
    const Vector y = least_squares(saz, sb);
    const double objective = norm2(residual_of(saz, y, sb));
    if (rec.record(fgk.z(), y, objective)) break;
    if (!fgk.can_continue()) mark_breakdown(h);
  }
  rec.finish(fgk.z());
  return h;
}

SolveHistory sflsmr(const LinearOperator& a, std::span<const double> b,
                    const SolverConfig& cfg, std::span<const double> x_true) {
  validate(a, b, cfg, x_true);
  const SketchOperator& s = require_sketch(cfg, a.cols(), "sflsmr");
  SolveHistory h;
  h.solver = "sflsmr";
  FgkProcess fgk(a, b, cfg.window, cfg.tau,
                 cfg.direction_basis.value_or(DirectionBasis::modified));
  const double beta = fgk.beta();
  // S·A♯w₁ is the first column of S_{A♯W}; s_{A♯b} = β times it.
  DenseMatrix satw(s.rows(), 0);
  satw.append_col(s.apply(fgk.last_adjoint()));
  Vector satb(satw.col(0).begin(), satw.col(0).end());
  scale(beta, satb);
  h.objective_ref = norm2(satb);
  Recorder rec(a, b, cfg, x_true, h, false);
  DenseMatrix m(s.rows(), 0);  // S_{A♯W} H, grown one column per step

  for (std::size_t k = 1; k <= cfg.maxit && fgk.can_continue(); ++k) {
    fgk.step();
    satw.append_col(s.apply(fgk.last_adjoint()));
    Vector col(s.rows(), 0.0);
    for (std::size_t j = 0; j <= k; ++j) {
      const double hjk = fgk.h_entry(j, k - 1);
      if (hjk != 0.0) axpy(hjk, satw.col(j), col);
    }
    m.append_col(col);
    const Vector y = least_squares(m, satb);
    const double objective = norm2(residual_of(m, y, satb));
    if (rec.record(fgk.z(), y, objective)) break;
    if (!fgk.can_continue()) mark_breakdown(h);
  }
  rec.finish(fgk.z());
  return h;
}

SolveHistory solve(SolverKind kind, const LinearOperator& a,
                   std::span<const double> b, const SolverConfig& cfg,
                   std::span<const double> x_true) {
  switch (kind) {
    case SolverKind::lsqr: return lsqr(a, b, cfg, x_true);
    case SolverKind::lsmr: return lsmr(a, b, cfg, x_true);
    case SolverKind::flsqr: return flsqr(a, b, cfg, x_true);
    case SolverKind::flsmr: return flsmr(a, b, cfg, x_true);
    case SolverKind::sflsqr: return sflsqr(a, b, cfg, x_true);
    case SolverKind::sflsmr: return sflsmr(a, b, cfg, x_true);
  }
  throw SolverError("solve: unknown solver");
}

std::optional<std::size_t> discrepancy_stop(std::span<const double> residuals,
                                            double eta, double delta_e) {
  for (std::size_t k = 0; k < residuals.size(); ++k)
    if (residuals[k] <= eta * delta_e) return k + 1;
  return std::nullopt;
}

std::optional<std::size_t> discrepancy_stop(const SolveHistory& history,
                                            double eta, double delta_e) {
  return discrepancy_stop(history.true_residual, eta, delta_e);
}

}  // namespace sfk
