#include "sfk/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <utility>

#include "sfk/random.hpp"

namespace sfk {

DenseMatrix unvec(const ImageGrid& grid, std::span<const double> v) {
  if (v.size() != grid.size())
    throw OperatorError("unvec: vector length does not match grid");
  return DenseMatrix(grid.height, grid.width, Vector(v.begin(), v.end()));
}

Vector vec(const DenseMatrix& image) { return image.data(); }

LinearOperator::LinearOperator(std::size_t rows, std::size_t cols, Apply forward,
                               Apply adjoint, bool matched, std::string name)
    : rows_(rows),
      cols_(cols),
      forward_(std::make_shared<const Apply>(std::move(forward))),
      adjoint_(std::make_shared<const Apply>(std::move(adjoint))),
      matched_(matched),
      name_(std::move(name)) {}

Vector LinearOperator::forward(std::span<const double> x) const {
  Vector out(rows_);
  forward(x, out);
  return out;
}

Vector LinearOperator::adjoint(std::span<const double> y) const {
  Vector out(cols_);
  adjoint(y, out);
  return out;
}

void LinearOperator::forward(std::span<const double> x,
                             std::span<double> out) const {
  if (x.size() != cols_ || out.size() != rows_)
    throw OperatorError(name_ + ": forward dimension mismatch");
  (*forward_)(x, out);
}

void LinearOperator::adjoint(std::span<const double> y,
                             std::span<double> out) const {
  if (y.size() != rows_ || out.size() != cols_)
    throw OperatorError(name_ + ": adjoint dimension mismatch");
  (*adjoint_)(y, out);
}

DenseMatrix LinearOperator::materialize() const {
  DenseMatrix m(rows_, cols_);
  Vector e(cols_, 0.0);
  for (std::size_t j = 0; j < cols_; ++j) {
    e[j] = 1.0;
    forward(e, m.col(j));
    e[j] = 0.0;
  }
  return m;
}

DenseMatrix LinearOperator::materialize_adjoint() const {
  DenseMatrix m(cols_, rows_);
  Vector e(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    e[i] = 1.0;
    adjoint(e, m.col(i));
    e[i] = 0.0;
  }
  return m;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      s += values[p] * x[col_idx[p]];
    y[i] = s;
  }
}

void SparseMatrix::multiply_transposed(std::span<const double> x,
                                       std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      y[col_idx[p]] += values[p] * xi;
  }
}

LinearOperator identity_operator(std::size_t n) {
  auto copy = [](std::span<const double> in, std::span<double> out) {
    std::copy(in.begin(), in.end(), out.begin());
  };
  return LinearOperator(n, n, copy, copy, true, "identity");
}

LinearOperator from_dense(DenseMatrix m) {
  if (!m.all_finite()) throw OperatorError("from_dense: non-finite entry");
  auto shared = std::make_shared<const DenseMatrix>(std::move(m));
  const std::size_t rows = shared->rows(), cols = shared->cols();
  return LinearOperator(
      rows, cols,
      [shared](std::span<const double> x, std::span<double> y) {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t j = 0; j < shared->cols(); ++j)
          if (x[j] != 0.0) axpy(x[j], shared->col(j), y);
      },
      [shared](std::span<const double> y, std::span<double> x) {
        for (std::size_t j = 0; j < shared->cols(); ++j)
          x[j] = dot(shared->col(j), y);
      },
      true, "dense");
}

LinearOperator from_sparse(std::shared_ptr<const SparseMatrix> m,
                           std::string name) {
  const std::size_t rows = m->rows, cols = m->cols;
  return LinearOperator(
      rows, cols,
      [m](std::span<const double> x, std::span<double> y) { m->multiply(x, y); },
      [m](std::span<const double> y, std::span<double> x) {
        m->multiply_transposed(y, x);
      },
      true, std::move(name));
}

// --- blur ------------------------------------------------------------------

Vector gaussian_kernel_1d(double variance) {
  if (!(variance > 0.0))
    throw OperatorError("gaussian_blur: variance must be positive");
  const double sigma = std::sqrt(variance);
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  Vector w(2 * radius + 1);
  for (std::ptrdiff_t t = -radius; t <= radius; ++t)
    w[t + radius] = std::exp(-static_cast<double>(t * t) / (2.0 * variance));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

namespace {

/// Maps an out-of-range index back into [0, n) by half-sample symmetric
/// reflection; returns -1 for zero boundary when outside.
std::ptrdiff_t boundary_index(std::ptrdiff_t i, std::ptrdiff_t n,
                              BoundaryPolicy policy) {
  if (i >= 0 && i < n) return i;
  if (policy == BoundaryPolicy::zero) return -1;
  const std::ptrdiff_t period = 2 * n;
  std::ptrdiff_t r = i % period;
  if (r < 0) r += period;
  return r < n ? r : period - 1 - r;
}

/// 1D blur along a strided line: out[i] = Σ_t w[t] in[b(i + t)].
void blur_line(std::span<const double> kernel, BoundaryPolicy policy,
               const double* in, double* out, std::ptrdiff_t n,
               std::ptrdiff_t stride) {
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
      const std::ptrdiff_t j = boundary_index(i + t, n, policy);
      if (j >= 0) s += kernel[t + radius] * in[j * stride];
    }
    out[i * stride] = s;
  }
}

/// Exact transpose of blur_line.
void blur_line_transposed(std::span<const double> kernel, BoundaryPolicy policy,
                          const double* in, double* out, std::ptrdiff_t n,
                          std::ptrdiff_t stride) {
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i * stride] = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double v = in[i * stride];
    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
      const std::ptrdiff_t j = boundary_index(i + t, n, policy);
      if (j >= 0) out[j * stride] += kernel[t + radius] * v;
    }
  }
}

}  // namespace

LinearOperator gaussian_blur(const ImageGrid& grid, double variance,
                             BoundaryPolicy boundary) {
  auto kernel = std::make_shared<const Vector>(gaussian_kernel_1d(variance));
  const auto h = static_cast<std::ptrdiff_t>(grid.height);
  const auto w = static_cast<std::ptrdiff_t>(grid.width);
  auto apply = [kernel, h, w, boundary](bool transpose) {
    return [kernel, h, w, boundary, transpose](std::span<const double> in,
                                               std::span<double> out) {
      Vector tmp(in.size());
      auto line = transpose ? blur_line_transposed : blur_line;
      // Columns are contiguous (stride 1), rows have stride h.
      for (std::ptrdiff_t j = 0; j < w; ++j)
        line(*kernel, boundary, in.data() + j * h, tmp.data() + j * h, h, 1);
      for (std::ptrdiff_t i = 0; i < h; ++i)
        line(*kernel, boundary, tmp.data() + i, out.data() + i, w, h);
    };
  };
  return LinearOperator(grid.size(), grid.size(), apply(false), apply(true),
                        true, "gaussian_blur");
}

// --- mask ------------------------------------------------------------------

std::vector<std::size_t> subsample_indices(const ImageGrid& grid,
                                           double keep_fraction,
                                           std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw OperatorError("subsample_mask: keep_fraction must lie in (0, 1]");
  const std::size_t n = grid.size();
  const auto kept = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(n) - 1e-9));
  if (kept == 0 || n == 0)
    throw OperatorError("subsample_mask: empty selection");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "mask"));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(kept);
  std::sort(idx.begin(), idx.end());
  return idx;
}

LinearOperator subsample_mask(const ImageGrid& grid, double keep_fraction,
                              std::uint64_t seed) {
  auto idx = std::make_shared<const std::vector<std::size_t>>(
      subsample_indices(grid, keep_fraction, seed));
  return LinearOperator(
      idx->size(), grid.size(),
      [idx](std::span<const double> x, std::span<double> y) {
        for (std::size_t k = 0; k < idx->size(); ++k) y[k] = x[(*idx)[k]];
      },
      [idx](std::span<const double> y, std::span<double> x) {
        std::fill(x.begin(), x.end(), 0.0);
        for (std::size_t k = 0; k < idx->size(); ++k) x[(*idx)[k]] = y[k];
      },
      true, "subsample_mask");
}

LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner) {
  if (outer.cols() != inner.rows())
    throw OperatorError("compose: outer.cols() != inner.rows()");
  const std::size_t mid = inner.rows();
  return LinearOperator(
      outer.rows(), inner.cols(),
      [outer, inner, mid](std::span<const double> x, std::span<double> y) {
        Vector t(mid);
        inner.forward(x, t);
        outer.forward(t, y);
      },
      [outer, inner, mid](std::span<const double> y, std::span<double> x) {
        Vector t(mid);
        outer.adjoint(y, t);
        inner.adjoint(t, x);
      },
      outer.matched() && inner.matched(),
      outer.name() + "*" + inner.name());
}

// --- CT ----------------------------------------------------------------------

double ParallelBeamGeometry::angle(std::size_t a) const {
  return std::numbers::pi * static_cast<double>(a) /
         static_cast<double>(n_angles);
}

double ParallelBeamGeometry::offset(std::size_t r) const {
  const double diag = std::hypot(static_cast<double>(grid.width),
                                 static_cast<double>(grid.height));
  return -diag / 2.0 + (static_cast<double>(r) + 0.5) * diag /
                           static_cast<double>(n_rays);
}

namespace {

double snap_trig(double v) { return std::abs(v) < 1e-12 ? 0.0 : v; }

}  // namespace

SparseMatrix parallel_beam_matrix(const ParallelBeamGeometry& g) {
  if (g.n_angles == 0 || g.n_rays == 0)
    throw OperatorError("ct_parallel: need at least one angle and one ray");
  if (g.grid.size() == 0) throw OperatorError("ct_parallel: empty grid");
  const double hw = static_cast<double>(g.grid.width) / 2.0;
  const double hh = static_cast<double>(g.grid.height) / 2.0;
  const auto width = static_cast<std::ptrdiff_t>(g.grid.width);
  const auto height = static_cast<std::ptrdiff_t>(g.grid.height);

  SparseMatrix m;
  m.rows = g.n_angles * g.n_rays;
  m.cols = g.grid.size();
  m.row_ptr.reserve(m.rows + 1);
  m.row_ptr.push_back(0);

  std::vector<double> cuts;
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t a = 0; a < g.n_angles; ++a) {
    const double th = g.angle(a);
    const double dx = snap_trig(std::cos(th)), dy = snap_trig(std::sin(th));
    for (std::size_t r = 0; r < g.n_rays; ++r) {
      const double t = g.offset(r);
      const double px = -t * dy, py = t * dx;  // foot point on the ray
      // Slab clipping of p + s·d against the grid box.
      double s_in = -std::numeric_limits<double>::infinity();
      double s_out = std::numeric_limits<double>::infinity();
      bool hit = true;
      auto clip = [&](double p, double d, double lo, double hi) {
        if (d == 0.0) {
          if (p <= lo || p >= hi) hit = false;
          return;
        }
        double s1 = (lo - p) / d, s2 = (hi - p) / d;
        if (s1 > s2) std::swap(s1, s2);
        s_in = std::max(s_in, s1);
        s_out = std::min(s_out, s2);
      };
      clip(px, dx, -hw, hw);
      clip(py, dy, -hh, hh);
      row.clear();
      if (hit && s_out > s_in) {
        cuts.clear();
        cuts.push_back(s_in);
        cuts.push_back(s_out);
        if (dx != 0.0)
          for (std::ptrdiff_t j = 0; j <= width; ++j) {
            const double s = (-hw + static_cast<double>(j) - px) / dx;
            if (s > s_in && s < s_out) cuts.push_back(s);
          }
        if (dy != 0.0)
          for (std::ptrdiff_t i = 0; i <= height; ++i) {
            const double s = (-hh + static_cast<double>(i) - py) / dy;
            if (s > s_in && s < s_out) cuts.push_back(s);
          }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
          const double len = cuts[c + 1] - cuts[c];
          if (len <= 1e-12) continue;
          const double sm = 0.5 * (cuts[c] + cuts[c + 1]);
          const double x = px + sm * dx, y = py + sm * dy;
          auto col = static_cast<std::ptrdiff_t>(std::floor(x + hw));
          auto rw = static_cast<std::ptrdiff_t>(std::floor(hh - y));
          col = std::clamp<std::ptrdiff_t>(col, 0, width - 1);
          rw = std::clamp<std::ptrdiff_t>(rw, 0, height - 1);
          const std::size_t pix = g.grid.index(static_cast<std::size_t>(rw),
                                               static_cast<std::size_t>(col));
          if (!row.empty() && row.back().first == pix)
            row.back().second += len;
          else
            row.emplace_back(pix, len);
        }
        std::sort(row.begin(), row.end());
      }
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k > 0 && row[k].first == row[k - 1].first) {
          m.values.back() += row[k].second;
          continue;
        }
        m.col_idx.push_back(row[k].first);
        m.values.push_back(row[k].second);
      }
      m.row_ptr.push_back(m.values.size());
    }
  }
  return m;
}

LinearOperator ct_parallel(const ImageGrid& grid, std::size_t n_angles,
                           std::size_t n_rays) {
  auto m = std::make_shared<const SparseMatrix>(
      parallel_beam_matrix({grid, n_angles, n_rays}));
  return from_sparse(std::move(m), "ct_parallel");
}

// --- unmatched adjoint ---------------------------------------------------------

namespace {

/// Random sparse n x m pattern with a fixed number of Gaussian entries per row.
SparseMatrix random_sparse(std::size_t rows, std::size_t cols,
                           std::size_t per_row, Rng& rng) {
  SparseMatrix e;
  e.rows = rows;
  e.cols = cols;
  e.row_ptr.reserve(rows + 1);
  e.row_ptr.push_back(0);
  std::uniform_int_distribution<std::size_t> pick(0, cols - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::size_t> cols_here;
  for (std::size_t i = 0; i < rows; ++i) {
    cols_here.clear();
    while (cols_here.size() < per_row) {
      const std::size_t c = pick(rng);
      if (std::find(cols_here.begin(), cols_here.end(), c) == cols_here.end())
        cols_here.push_back(c);
    }
    std::sort(cols_here.begin(), cols_here.end());
    for (std::size_t c : cols_here) {
      e.col_idx.push_back(c);
      e.values.push_back(normal(rng));
    }
    e.row_ptr.push_back(e.values.size());
  }
  return e;
}

constexpr std::size_t kCalibrationProbes = 2000;

}  // namespace

LinearOperator perturb_adjoint(const LinearOperator& op, double asymmetry_target,
                               std::uint64_t seed) {
  if (!(asymmetry_target >= 0.0))
    throw OperatorError("perturb_adjoint: asymmetry_target must be >= 0");
  if (!op.matched())
    throw OperatorError("perturb_adjoint: operator adjoint is already unmatched");
  if (asymmetry_target == 0.0) return op;

  const std::size_t n = op.cols(), m = op.rows();
  Rng rng(derive_seed(seed, "adjoint-perturbation"));
  auto e = std::make_shared<SparseMatrix>(
      random_sparse(n, m, std::min<std::size_t>(m, 64), rng));

  // Calibrate: xᵀA y − yᵀ(Aᵀ + E)x = −yᵀE x, so the measure scales linearly.
  Rng probe(derive_seed(seed, "adjoint-calibration"));
  Vector ex(n);
  double mean = 0.0;
  for (std::size_t p = 0; p < kCalibrationProbes; ++p) {
    const Vector x = unit_vector(m, probe);
    const Vector y = unit_vector(n, probe);
    e->multiply(x, ex);
    mean += std::abs(dot(y, ex));
  }
  mean /= static_cast<double>(kCalibrationProbes);
  scale(asymmetry_target / mean, e->values);

  std::shared_ptr<const SparseMatrix> pert = e;
  return LinearOperator(
      m, n, [op](std::span<const double> x, std::span<double> y) { op.forward(x, y); },
      [op, pert](std::span<const double> y, std::span<double> x) {
        op.adjoint(y, x);
        Vector ey(x.size());
        pert->multiply(y, ey);
        axpy(1.0, ey, x);
      },
      false, op.name() + "+unmatched");
}

double asymmetry_measure(const LinearOperator& op, std::size_t n_probes,
                         std::uint64_t seed) {
  if (n_probes == 0) throw OperatorError("asymmetry_measure: need >= 1 probe");
  Rng rng(derive_seed(seed, "asymmetry-probes"));
  double total = 0.0;
  for (std::size_t p = 0; p < n_probes; ++p) {
    const Vector x = unit_vector(op.rows(), rng);
    const Vector y = unit_vector(op.cols(), rng);
    total += std::abs(dot(x, op.forward(y)) - dot(y, op.adjoint(x)));
  }
  return total / static_cast<double>(n_probes);
}

}  // namespace sfk
