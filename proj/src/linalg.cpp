#include "sfk/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "sfk/random.hpp"

namespace sfk {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Vector column_major)
    : rows_(rows), cols_(cols), data_(std::move(column_major)) {
  if (data_.size() != rows_ * cols_)
    throw LinalgError("DenseMatrix: entry count does not match shape");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<Vector>& rows) {
  const std::size_t nr = rows.size();
  const std::size_t nc = nr ? rows.front().size() : 0;
  DenseMatrix m(nr, nc);
  for (std::size_t i = 0; i < nr; ++i) {
    if (rows[i].size() != nc)
      throw LinalgError("DenseMatrix::from_rows: ragged rows");
    for (std::size_t j = 0; j < nc; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::left_cols(std::size_t ncols) const {
  if (ncols > cols_) throw LinalgError("left_cols: too many columns");
  return DenseMatrix(rows_, ncols,
                     Vector(data_.begin(), data_.begin() + rows_ * ncols));
}

void DenseMatrix::append_col(std::span<const double> column) {
  if (cols_ == 0 && rows_ == 0) rows_ = column.size();
  if (column.size() != rows_)
    throw LinalgError("append_col: column length does not match rows");
  data_.insert(data_.end(), column.begin(), column.end());
  ++cols_;
}

bool DenseMatrix::all_finite() const noexcept { return sfk::all_finite(data_); }

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LinalgError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) {
  // Scaled accumulation, so huge/tiny entries do not overflow.
  double scale_ = 0.0, ssq = 1.0;
  for (double v : x) {
    if (v != 0.0) {
      const double a = std::abs(v);
      if (scale_ < a) {
        ssq = 1.0 + ssq * (scale_ / a) * (scale_ / a);
        scale_ = a;
      } else {
        ssq += (a / scale_) * (a / scale_);
      }
    }
  }
  return scale_ * std::sqrt(ssq);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw LinalgError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

bool all_finite(std::span<const double> x) noexcept {
  return std::all_of(x.begin(), x.end(),
                     [](double v) { return std::isfinite(v); });
}

Vector matvec(const DenseMatrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) throw LinalgError("matvec: dimension mismatch");
  Vector y(m.rows(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) axpy(x[j], m.col(j), y);
  return y;
}

Vector matvec_transposed(const DenseMatrix& m, std::span<const double> x) {
  if (x.size() != m.rows())
    throw LinalgError("matvec_transposed: dimension mismatch");
  Vector y(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) y[j] = dot(m.col(j), x);
  return y;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw LinalgError("matmul: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj != 0.0) axpy(bkj, a.col(k), c.col(j));
    }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw LinalgError("matmul_tn: dimension mismatch");
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) c(i, j) = dot(a.col(i), b.col(j));
  return c;
}

double frobenius_norm(const DenseMatrix& m) { return norm2(m.data()); }

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw LinalgError("subtract: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

namespace {

void require_finite(const DenseMatrix& m, const char* who) {
  if (!m.all_finite())
    throw LinalgError(std::string(who) + ": non-finite matrix entry");
}

/// Householder reflector H = I − beta·v·vᵀ mapping x onto alpha·e₁.
struct Reflector {
  Vector v;
  double beta = 0.0;
  double alpha = 0.0;
};

Reflector make_reflector(std::span<const double> x) {
  Reflector h;
  h.v.assign(x.begin(), x.end());
  const double nx = norm2(x);
  if (nx == 0.0) return h;
  h.alpha = x[0] >= 0.0 ? -nx : nx;
  h.v[0] -= h.alpha;
  const double vv = dot(h.v, h.v);
  h.beta = vv > 0.0 ? 2.0 / vv : 0.0;
  return h;
}

void apply_reflector(const Reflector& h, std::span<double> x) {
  if (h.beta == 0.0) return;
  const double t = h.beta * dot(h.v, x);
  axpy(-t, h.v, x);
}

struct PivotedQr {
  DenseMatrix r;                  // min(m,n) x n upper trapezoid (permuted)
  std::vector<Reflector> hh;      // reflector k acts on rows k..m-1
  std::vector<std::size_t> perm;  // column j of r is column perm[j] of input
  std::size_t rank = 0;
};

PivotedQr pivoted_qr(const DenseMatrix& m, double rel_tol) {
  const std::size_t rows = m.rows(), cols = m.cols();
  const std::size_t steps = std::min(rows, cols);
  DenseMatrix a = m;
  PivotedQr out;
  out.perm.resize(cols);
  std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
  out.hh.reserve(steps);

  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < cols; ++j) {
      const double nj = norm2(a.col(j).subspan(k));
      if (nj > best_norm) {
        best_norm = nj;
        best = j;
      }
    }
    if (best != k) {
      std::swap_ranges(a.col(k).begin(), a.col(k).end(), a.col(best).begin());
      std::swap(out.perm[k], out.perm[best]);
    }
    Reflector h = make_reflector(a.col(k).subspan(k));
    for (std::size_t j = k + 1; j < cols; ++j)
      apply_reflector(h, a.col(j).subspan(k));
    a(k, k) = h.beta == 0.0 ? 0.0 : h.alpha;
    for (std::size_t i = k + 1; i < rows; ++i) a(i, k) = 0.0;
    out.hh.push_back(std::move(h));
  }

  out.r = DenseMatrix(steps, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < std::min(steps, j + 1); ++i) out.r(i, j) = a(i, j);

  const double lead = steps ? std::abs(out.r(0, 0)) : 0.0;
  const double tol = rel_tol * lead;
  while (out.rank < steps && std::abs(out.r(out.rank, out.rank)) > tol &&
         lead > 0.0)
    ++out.rank;
  return out;
}

/// Solves the upper-triangular system r[0:k,0:k] x = rhs[0:k] in place.
void back_substitute(const DenseMatrix& r, std::size_t k, std::span<double> x) {
  for (std::size_t ii = k; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < k; ++j) s -= r(ii, j) * x[j];
    x[ii] = s / r(ii, ii);
  }
}

}  // namespace

ThinQr thin_qr(const DenseMatrix& m) {
  const std::size_t rows = m.rows(), cols = m.cols();
  if (rows < cols) throw LinalgError("thin_qr: requires rows >= cols");
  require_finite(m, "thin_qr");
  DenseMatrix a = m;
  std::vector<Reflector> hh;
  hh.reserve(cols);
  for (std::size_t k = 0; k < cols; ++k) {
    Reflector h = make_reflector(a.col(k).subspan(k));
    for (std::size_t j = k + 1; j < cols; ++j)
      apply_reflector(h, a.col(j).subspan(k));
    a(k, k) = h.beta == 0.0 ? 0.0 : h.alpha;
    hh.push_back(std::move(h));
  }
  ThinQr out{DenseMatrix(rows, cols), DenseMatrix(cols, cols)};
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i <= j; ++i) out.r(i, j) = a(i, j);
  for (std::size_t j = 0; j < cols; ++j) {
    auto qj = out.q.col(j);
    qj[j] = 1.0;
    for (std::size_t k = std::min(j + 1, cols); k-- > 0;)
      apply_reflector(hh[k], qj.subspan(k));
  }
  return out;
}

Vector least_squares(const DenseMatrix& m, std::span<const double> rhs) {
  if (rhs.size() != m.rows())
    throw LinalgError("least_squares: rhs length does not match rows");
  require_finite(m, "least_squares");
  if (!all_finite(rhs)) throw LinalgError("least_squares: non-finite rhs");
  const std::size_t cols = m.cols();
  Vector y(cols, 0.0);
  if (cols == 0 || m.rows() == 0) return y;

  PivotedQr qr = pivoted_qr(m, 1e-12);
  Vector c(rhs.begin(), rhs.end());
  for (std::size_t k = 0; k < qr.hh.size(); ++k)
    apply_reflector(qr.hh[k], std::span<double>(c).subspan(k));

  const std::size_t rank = qr.rank;
  if (rank == 0) return y;
  Vector z(cols, 0.0);
  if (rank == cols) {
    std::copy_n(c.begin(), cols, z.begin());
    back_substitute(qr.r, cols, z);
  } else {
    // Complete orthogonal decomposition: [R11 R12] = R2ᵀ Q2ᵀ with
    // Q2 R2 = [R11 R12]ᵀ, so the minimum-norm z is Q2 R2⁻ᵀ c[0:rank].
    DenseMatrix rt(cols, rank);
    for (std::size_t i = 0; i < rank; ++i)
      for (std::size_t j = i; j < cols; ++j) rt(j, i) = qr.r(i, j);
    ThinQr q2 = thin_qr(rt);
    Vector w(c.begin(), c.begin() + rank);
    for (std::size_t i = 0; i < rank; ++i) {  // forward solve R2ᵀ w = c
      double s = w[i];
      for (std::size_t j = 0; j < i; ++j) s -= q2.r(j, i) * w[j];
      w[i] = s / q2.r(i, i);
    }
    z = matvec(q2.q, w);
  }
  for (std::size_t j = 0; j < cols; ++j) y[qr.perm[j]] = z[j];
  return y;
}

std::size_t numerical_rank(const DenseMatrix& m, double rel_tol) {
  require_finite(m, "numerical_rank");
  if (m.rows() == 0 || m.cols() == 0) return 0;
  return pivoted_qr(m, rel_tol).rank;
}

// ---------------------------------------------------------------------------
// Golub-Kahan-Reinsch SVD for rows >= cols. Householder bidiagonalization
// followed by implicitly shifted QR sweeps on the bidiagonal.

namespace {

struct GkrResult {
  DenseMatrix u;  // m x n
  Vector s;       // n
  DenseMatrix v;  // n x n
};

GkrResult gkr_svd(DenseMatrix a, bool want_vectors) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  const int nu = std::min(m, n);
  GkrResult out;
  Vector s(std::min(m + 1, n), 0.0);
  Vector e(n, 0.0);
  Vector work(m, 0.0);
  DenseMatrix u(want_vectors ? m : 0, want_vectors ? nu : 0);
  DenseMatrix v(want_vectors ? n : 0, want_vectors ? n : 0);

  const int nct = std::min(m - 1, n);
  const int nrt = std::max(0, std::min(n - 2, m));
  for (int k = 0; k < std::max(nct, nrt); ++k) {
    if (k < nct) {
      s[k] = 0.0;
      for (int i = k; i < m; ++i) s[k] = std::hypot(s[k], a(i, k));
      if (s[k] != 0.0) {
        if (a(k, k) < 0.0) s[k] = -s[k];
        for (int i = k; i < m; ++i) a(i, k) /= s[k];
        a(k, k) += 1.0;
      }
      s[k] = -s[k];
    }
    for (int j = k + 1; j < n; ++j) {
      if (k < nct && s[k] != 0.0) {
        double t = 0.0;
        for (int i = k; i < m; ++i) t += a(i, k) * a(i, j);
        t = -t / a(k, k);
        for (int i = k; i < m; ++i) a(i, j) += t * a(i, k);
      }
      e[j] = a(k, j);
    }
    if (want_vectors && k < nct)
      for (int i = k; i < m; ++i) u(i, k) = a(i, k);
    if (k < nrt) {
      e[k] = 0.0;
      for (int i = k + 1; i < n; ++i) e[k] = std::hypot(e[k], e[i]);
      if (e[k] != 0.0) {
        if (e[k + 1] < 0.0) e[k] = -e[k];
        for (int i = k + 1; i < n; ++i) e[i] /= e[k];
        e[k + 1] += 1.0;
      }
      e[k] = -e[k];
      if (k + 1 < m && e[k] != 0.0) {
        for (int i = k + 1; i < m; ++i) work[i] = 0.0;
        for (int j = k + 1; j < n; ++j)
          for (int i = k + 1; i < m; ++i) work[i] += e[j] * a(i, j);
        for (int j = k + 1; j < n; ++j) {
          const double t = -e[j] / e[k + 1];
          for (int i = k + 1; i < m; ++i) a(i, j) += t * work[i];
        }
      }
      if (want_vectors)
        for (int i = k + 1; i < n; ++i) v(i, k) = e[i];
    }
  }

  int p = std::min(n, m + 1);
  if (nct < n) s[nct] = a(nct, nct);
  if (m < p) s[p - 1] = 0.0;
  if (nrt + 1 < p) e[nrt] = a(nrt, p - 1);
  e[p - 1] = 0.0;

  if (want_vectors) {
    for (int j = nct; j < nu; ++j) {
      for (int i = 0; i < m; ++i) u(i, j) = 0.0;
      u(j, j) = 1.0;
    }
    for (int k = nct - 1; k >= 0; --k) {
      if (s[k] != 0.0) {
        for (int j = k + 1; j < nu; ++j) {
          double t = 0.0;
          for (int i = k; i < m; ++i) t += u(i, k) * u(i, j);
          t = -t / u(k, k);
          for (int i = k; i < m; ++i) u(i, j) += t * u(i, k);
        }
        for (int i = k; i < m; ++i) u(i, k) = -u(i, k);
        u(k, k) = 1.0 + u(k, k);
        for (int i = 0; i < k; ++i) u(i, k) = 0.0;
      } else {
        for (int i = 0; i < m; ++i) u(i, k) = 0.0;
        u(k, k) = 1.0;
      }
    }
    for (int k = n - 1; k >= 0; --k) {
      if (k < nrt && e[k] != 0.0) {
        for (int j = k + 1; j < n; ++j) {
          double t = 0.0;
          for (int i = k + 1; i < n; ++i) t += v(i, k) * v(i, j);
          t = -t / v(k + 1, k);
          for (int i = k + 1; i < n; ++i) v(i, j) += t * v(i, k);
        }
      }
      for (int i = 0; i < n; ++i) v(i, k) = 0.0;
      v(k, k) = 1.0;
    }
  }

  const int pp = p - 1;
  int iter = 0;
  const int max_iter = 75 * std::max(n, 1);
  const double eps = std::numeric_limits<double>::epsilon();
  const double tiny = std::ldexp(1.0, -966);
  auto rotate_cols = [](DenseMatrix& q, int c1, int c2, double cs, double sn) {
    for (std::size_t i = 0; i < q.rows(); ++i) {
      const double t = cs * q(i, c1) + sn * q(i, c2);
      q(i, c2) = -sn * q(i, c1) + cs * q(i, c2);
      q(i, c1) = t;
    }
  };

  while (p > 0) {
    if (iter > max_iter)
      throw LinalgError("svd: QR iteration failed to converge");
    int k, kase;
    for (k = p - 2; k >= -1; --k) {
      if (k == -1) break;
      if (std::abs(e[k]) <= tiny + eps * (std::abs(s[k]) + std::abs(s[k + 1]))) {
        e[k] = 0.0;
        break;
      }
    }
    if (k == p - 2) {
      kase = 4;
    } else {
      int ks;
      for (ks = p - 1; ks >= k; --ks) {
        if (ks == k) break;
        const double t = (ks != p ? std::abs(e[ks]) : 0.0) +
                         (ks != k + 1 ? std::abs(e[ks - 1]) : 0.0);
        if (std::abs(s[ks]) <= tiny + eps * t) {
          s[ks] = 0.0;
          break;
        }
      }
      if (ks == k) {
        kase = 3;
      } else if (ks == p - 1) {
        kase = 1;
      } else {
        kase = 2;
        k = ks;
      }
    }
    ++k;

    switch (kase) {
      case 1: {  // deflate negligible s[p-1]
        double f = e[p - 2];
        e[p - 2] = 0.0;
        for (int j = p - 2; j >= k; --j) {
          const double t = std::hypot(s[j], f);
          const double cs = s[j] / t, sn = f / t;
          s[j] = t;
          if (j != k) {
            f = -sn * e[j - 1];
            e[j - 1] = cs * e[j - 1];
          }
          if (want_vectors) rotate_cols(v, j, p - 1, cs, sn);
        }
      } break;
      case 2: {  // split at negligible s[k-1]
        double f = e[k - 1];
        e[k - 1] = 0.0;
        for (int j = k; j < p; ++j) {
          const double t = std::hypot(s[j], f);
          const double cs = s[j] / t, sn = f / t;
          s[j] = t;
          f = -sn * e[j];
          e[j] = cs * e[j];
          if (want_vectors) rotate_cols(u, j, k - 1, cs, sn);
        }
      } break;
      case 3: {  // one implicit QR sweep
        const double sc = std::max(
            {std::abs(s[p - 1]), std::abs(s[p - 2]), std::abs(e[p - 2]),
             std::abs(s[k]), std::abs(e[k])});
        const double sp = s[p - 1] / sc, spm1 = s[p - 2] / sc,
                     epm1 = e[p - 2] / sc, sk = s[k] / sc, ek = e[k] / sc;
        const double b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
        const double c = (sp * epm1) * (sp * epm1);
        double shift = 0.0;
        if (b != 0.0 || c != 0.0) {
          shift = std::sqrt(b * b + c);
          if (b < 0.0) shift = -shift;
          shift = c / (b + shift);
        }
        double f = (sk + sp) * (sk - sp) + shift;
        double g = sk * ek;
        for (int j = k; j < p - 1; ++j) {
          double t = std::hypot(f, g);
          double cs = f / t, sn = g / t;
          if (j != k) e[j - 1] = t;
          f = cs * s[j] + sn * e[j];
          e[j] = cs * e[j] - sn * s[j];
          g = sn * s[j + 1];
          s[j + 1] = cs * s[j + 1];
          if (want_vectors) rotate_cols(v, j, j + 1, cs, sn);
          t = std::hypot(f, g);
          cs = f / t;
          sn = g / t;
          s[j] = t;
          f = cs * e[j] + sn * s[j + 1];
          s[j + 1] = -sn * e[j] + cs * s[j + 1];
          g = sn * e[j + 1];
          e[j + 1] = cs * e[j + 1];
          if (want_vectors && j < m - 1) rotate_cols(u, j, j + 1, cs, sn);
        }
        e[p - 2] = f;
        ++iter;
      } break;
      case 4: {  // convergence of s[k]
        if (s[k] <= 0.0) {
          s[k] = s[k] < 0.0 ? -s[k] : 0.0;
          if (want_vectors)
            for (int i = 0; i <= pp; ++i) v(i, k) = -v(i, k);
        }
        while (k < pp) {
          if (s[k] >= s[k + 1]) break;
          std::swap(s[k], s[k + 1]);
          if (want_vectors && k < n - 1)
            std::swap_ranges(v.col(k).begin(), v.col(k).end(),
                             v.col(k + 1).begin());
          if (want_vectors && k < m - 1)
            std::swap_ranges(u.col(k).begin(), u.col(k).end(),
                             u.col(k + 1).begin());
          ++k;
        }
        iter = 0;
        --p;
      } break;
    }
  }
  s.resize(nu);
  out.s = std::move(s);
  out.u = std::move(u);
  out.v = std::move(v);
  return out;
}

}  // namespace

DenseMatrix SvdFactors::reconstruct() const {
  DenseMatrix us = u;
  for (std::size_t j = 0; j < sigma.size(); ++j) scale(sigma[j], us.col(j));
  return matmul(us, vt);
}

SvdFactors SvdFactors::truncated(std::size_t rank) const {
  const std::size_t r = std::min(rank, sigma.size());
  SvdFactors t;
  t.u = u.left_cols(r);
  t.sigma.assign(sigma.begin(), sigma.begin() + r);
  t.vt = DenseMatrix(r, vt.cols());
  for (std::size_t j = 0; j < vt.cols(); ++j)
    for (std::size_t i = 0; i < r; ++i) t.vt(i, j) = vt(i, j);
  return t;
}

SvdFactors svd(const DenseMatrix& m) {
  require_finite(m, "svd");
  SvdFactors f;
  if (m.rows() == 0 || m.cols() == 0) {
    f.u = DenseMatrix(m.rows(), 0);
    f.vt = DenseMatrix(0, m.cols());
    return f;
  }
  if (m.rows() >= m.cols()) {
    GkrResult g = gkr_svd(m, true);
    // Drop columns of U beyond the n retained singular values.
    f.u = g.u.left_cols(g.s.size());
    f.sigma = std::move(g.s);
    f.vt = g.v.transposed();
  } else {
    GkrResult g = gkr_svd(m.transposed(), true);
    f.u = std::move(g.v);
    f.sigma = std::move(g.s);
    f.vt = g.u.left_cols(f.sigma.size()).transposed();
  }
  return f;
}

double spectral_norm(const DenseMatrix& m) {
  require_finite(m, "spectral_norm");
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  GkrResult g = m.rows() >= m.cols() ? gkr_svd(m, false)
                                     : gkr_svd(m.transposed(), false);
  return g.s.empty() ? 0.0 : g.s.front();
}

SvdFactors randomized_svd(const DenseMatrix& m, std::size_t rank,
                          const RandomizedSvdParams& params) {
  if (rank == 0) throw LinalgError("randomized_svd: rank must be >= 1");
  const std::size_t sample = rank + params.oversample;
  if (sample > std::min(m.rows(), m.cols()))
    throw LinalgError(
        "randomized_svd: rank + oversample exceeds the smaller dimension");
  require_finite(m, "randomized_svd");

  Rng rng(params.seed);
  DenseMatrix omega = gaussian_matrix(m.cols(), sample, rng);
  DenseMatrix q = thin_qr(matmul(m, omega)).q;
  for (std::size_t it = 0; it < params.power_iters; ++it) {
    DenseMatrix w = thin_qr(matmul_tn(m, q)).q;  // orthonormal basis of Mᵀ Q
    q = thin_qr(matmul(m, w)).q;
  }
  DenseMatrix b = matmul_tn(q, m);  // sample x cols
  SvdFactors small = svd(b);
  SvdFactors out;
  out.u = matmul(q, small.u);
  out.sigma = std::move(small.sigma);
  out.vt = std::move(small.vt);
  return out.truncated(rank);
}

}  // namespace sfk
