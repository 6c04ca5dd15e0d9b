#include "sfk/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "sfk/random.hpp"

namespace sfk {

namespace {

DenseMatrix materialize_az(const LinearOperator& a, const DenseMatrix& z) {
  if (z.rows() != a.cols()) throw AnalysisError("basis rows must equal operator cols");
  DenseMatrix az(a.rows(), z.cols());
  for (std::size_t j = 0; j < z.cols(); ++j) a.forward(z.col(j), az.col(j));
  return az;
}

// Solves R X = B in place for upper triangular R.
void back_substitute(const DenseMatrix& r, DenseMatrix& b) {
  const std::size_t k = r.rows();
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t i = k; i-- > 0;) {
      double s = b(i, c);
      for (std::size_t j = i + 1; j < k; ++j) s -= r(i, j) * b(j, c);
      b(i, c) = s / r(i, i);
    }
}

}  // namespace

Vector project_out(const DenseMatrix& q, std::span<const double> v) {
  Vector out(v.begin(), v.end());
  for (std::size_t j = 0; j < q.cols(); ++j) axpy(-dot(q.col(j), out), q.col(j), out);
  return out;
}

OptimalResidual optimal_residual(const DenseMatrix& az, std::span<const double> b) {
  if (az.rows() != b.size()) throw AnalysisError("optimal_residual: dimension mismatch");
  OptimalResidual out;
  const std::size_t k = az.cols();
  if (k == 0) {
    out.r_opt = norm2(b);
    out.q = DenseMatrix(b.size(), 0);
    return out;
  }
  if (k > az.rows()) throw AnalysisError("optimal_residual: more basis vectors than rows");
  const std::size_t rank = numerical_rank(az);
  out.y_opt = least_squares(az, b);
  if (rank == k) {
    out.q = thin_qr(az).q;
    out.r_opt = norm2(project_out(out.q, b));
  } else {
    out.rank_deficient = true;
    out.q = svd(az).truncated(rank).u;
    Vector r = matvec(az, out.y_opt);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    out.r_opt = norm2(r);
  }
  return out;
}

OptimalResidual optimal_residual(const LinearOperator& a, const DenseMatrix& z,
                                 std::span<const double> b) {
  return optimal_residual(materialize_az(a, z), b);
}

double pinv_leakage(const DenseMatrix& g, const DenseMatrix& q) {
  if (g.cols() != q.rows()) throw AnalysisError("pinv_leakage: dimension mismatch");
  const std::size_t k = q.cols();
  if (k == 0) return 0.0;
  const DenseMatrix gq = matmul(g, q);
  if (gq.rows() < k || numerical_rank(gq) < k)
    throw AnalysisError("sketched basis is rank deficient; the bound does not apply");
  // (GQ)† G = R⁻¹ Q₁ᵀ G with GQ = Q₁ R.
  const ThinQr f = thin_qr(gq);
  DenseMatrix m = matmul_tn(f.q, g);
  back_substitute(f.r, m);
  // M Q = I, so M (I − QQᵀ) = M − Qᵀ.
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < k; ++i) m(i, j) -= q(j, i);
  return spectral_norm(m);
}

double bound_sflsqr(const SketchOperator& s, const DenseMatrix& q) {
  if (s.cols() != q.rows()) throw AnalysisError("bound_sflsqr: sketch must act on R^m");
  const double l = pinv_leakage(s.materialize(), q);
  return std::sqrt(1.0 + l * l);
}

DenseMatrix sketch_transpose(const SketchOperator& s, const LinearOperator& a) {
  if (s.cols() != a.cols()) throw AnalysisError("sketch must act on R^n");
  const DenseMatrix st = s.materialize().transposed();  // n x s
  DenseMatrix out(s.rows(), a.rows());
  Vector col(a.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    a.forward(st.col(i), col);
    for (std::size_t j = 0; j < a.rows(); ++j) out(i, j) = col[j];
  }
  return out;
}

double bound_sflsmr_from(const DenseMatrix& sat, const DenseMatrix& q) {
  const double l = pinv_leakage(sat, q);
  return std::sqrt(1.0 + l * l);
}

double bound_sflsmr(const SketchOperator& s, const LinearOperator& a,
                    const DenseMatrix& q) {
  return bound_sflsmr_from(sketch_transpose(s, a), q);
}

std::size_t BoundReport::violations() const {
  std::size_t v = 0;
  for (const BoundRow& r : rows) v += !r.bound1_ok + !r.bound2_ok + !r.optimal_ok;
  return v;
}

BoundReport bound_report(const LinearOperator& a, std::span<const double> b,
                         const SolverConfig& cfg, const SketchOperator& s_m,
                         const SketchOperator& s_n, double slack) {
  SolverConfig c = cfg;
  c.keep_basis = true;
  c.track_true_residual = true;
  c.stop_on_discrepancy = false;
  c.sketch = s_m;
  const SolveHistory h1 = sflsqr(a, b, c);
  c.sketch = s_n;
  const SolveHistory h2 = sflsmr(a, b, c);

  BoundReport rep;
  rep.b_norm = norm2(b);
  rep.slack = slack;
  const std::size_t kmax = std::min({h1.iterations(), h2.iterations(), h1.basis.cols()});
  const DenseMatrix az = materialize_az(a, h1.basis.left_cols(kmax));
  const DenseMatrix sm = s_m.materialize();
  const DenseMatrix sat = sketch_transpose(s_n, a);
  const double tol = slack * rep.b_norm;
  for (std::size_t k = 1; k <= kmax; ++k) {
    const OptimalResidual opt = optimal_residual(az.left_cols(k), b);
    if (opt.rank_deficient) break;
    BoundRow row;
    row.k = k;
    row.r_opt = opt.r_opt;
    row.r_sflsqr = h1.true_residual[k - 1];
    row.r_sflsmr = h2.true_residual[k - 1];
    const double l1 = pinv_leakage(sm, opt.q), l2 = pinv_leakage(sat, opt.q);
    row.factor1 = std::sqrt(1.0 + l1 * l1);
    row.factor2 = std::sqrt(1.0 + l2 * l2);
    row.bound1 = row.factor1 * row.r_opt;
    row.bound2 = row.factor2 * row.r_opt;
    row.bound1_ok = row.r_sflsqr <= row.bound1 + tol;
    row.bound2_ok = row.r_sflsmr <= row.bound2 + tol;
    row.optimal_ok = row.r_opt <= std::min(row.r_sflsqr, row.r_sflsmr) + tol;
    rep.rows.push_back(row);
  }
  return rep;
}

CorollaryResult corollary_check(const LinearOperator& a, const DenseMatrix& z,
                                std::span<const double> b, std::size_t s,
                                std::size_t n_trials, std::uint64_t seed,
                                double scale) {
  const std::size_t k = z.cols();
  if (s <= k + 1) throw AnalysisError("corollary_check needs s > k + 1");
  if (n_trials == 0) throw AnalysisError("corollary_check needs at least one trial");
  const DenseMatrix az = materialize_az(a, z);
  CorollaryResult out;
  out.k = k;
  out.s = s;
  out.trials = n_trials;
  out.r_opt = optimal_residual(az, b).r_opt;
  const double denom = double(s) - double(k) - 1.0;
  out.factor_stated = 1.0 + double(s) / denom;
  out.factor_exact = 1.0 + double(k) / denom;
  out.predicted = out.r_opt * out.r_opt * out.factor_stated;
  out.predicted_exact = out.r_opt * out.r_opt * out.factor_exact;

  double sum = 0.0, sum_sq = 0.0;
  Vector r(b.size());
  for (std::size_t t = 0; t < n_trials; ++t) {
    const SketchOperator sk = gaussian_sketch(s, a.rows(), mix_seed(seed, t), scale);
    const Vector y = least_squares(sk.apply_cols(az), sk.apply(b));
    const Vector fit = matvec(az, y);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - fit[i];
    const double v = dot(r, r);
    sum += v;
    sum_sq += v * v;
  }
  const double n = double(n_trials);
  out.empirical_mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * out.empirical_mean * out.empirical_mean) / (n - 1)) : 0.0;
  out.standard_error = std::sqrt(var / n);
  return out;
}

}  // namespace sfk
