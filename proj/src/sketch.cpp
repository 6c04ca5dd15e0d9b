#include "sfk/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfk/random.hpp"

namespace sfk {

std::string to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::identity: return "identity";
    case SketchKind::gaussian: return "gaussian";
    case SketchKind::countsketch: return "countsketch";
  }
  return "unknown";
}

SketchKind sketch_kind_from_string(const std::string& name) {
  if (name == "identity") return SketchKind::identity;
  if (name == "gaussian") return SketchKind::gaussian;
  if (name == "countsketch") return SketchKind::countsketch;
  throw SketchError("unknown sketch kind '" + name + "'");
}

namespace {

void check_dims(std::size_t s, std::size_t d) {
  if (s == 0) throw SketchError("sketch: s must be >= 1");
  if (s > d) throw SketchError("sketch: s must not exceed the input dimension");
}

}  // namespace

SketchOperator identity_sketch(std::size_t d) {
  if (d == 0) throw SketchError("identity_sketch: empty dimension");
  SketchOperator op;
  op.kind_ = SketchKind::identity;
  op.rows_ = op.cols_ = d;
  return op;
}

SketchOperator gaussian_sketch(std::size_t s, std::size_t d, std::uint64_t seed,
                               double scale_factor) {
  check_dims(s, d);
  SketchOperator op;
  op.kind_ = SketchKind::gaussian;
  op.rows_ = s;
  op.cols_ = d;
  op.seed_ = seed;
  op.scale_ = scale_factor > 0.0 ? scale_factor
                                 : 1.0 / std::sqrt(static_cast<double>(s));
  Rng rng(derive_seed(seed, "gaussian-sketch"));
  DenseMatrix g = gaussian_matrix(s, d, rng);
  scale(op.scale_, g.data());
  op.dense_ = std::make_shared<const DenseMatrix>(std::move(g));
  return op;
}

SketchOperator countsketch(std::size_t s, std::size_t d, std::uint64_t seed) {
  check_dims(s, d);
  if (s > std::numeric_limits<std::uint32_t>::max())
    throw SketchError("countsketch: too many rows");
  SketchOperator op;
  op.kind_ = SketchKind::countsketch;
  op.rows_ = s;
  op.cols_ = d;
  op.seed_ = seed;
  Rng rng(derive_seed(seed, "countsketch"));
  std::uniform_int_distribution<std::uint32_t> row(
      0, static_cast<std::uint32_t>(s - 1));
  std::bernoulli_distribution coin(0.5);
  std::vector<std::uint32_t> buckets(d);
  std::vector<std::int8_t> signs(d);
  for (std::size_t j = 0; j < d; ++j) {
    buckets[j] = row(rng);
    signs[j] = coin(rng) ? 1 : -1;
  }
  op.buckets_ = std::make_shared<const std::vector<std::uint32_t>>(std::move(buckets));
  op.signs_ = std::make_shared<const std::vector<std::int8_t>>(std::move(signs));
  return op;
}

SketchOperator make_sketch(SketchKind kind, std::size_t s, std::size_t d,
                           std::uint64_t seed) {
  switch (kind) {
    case SketchKind::identity: return identity_sketch(d);
    case SketchKind::gaussian: return gaussian_sketch(s, d, seed);
    case SketchKind::countsketch: return countsketch(s, d, seed);
  }
  throw SketchError("make_sketch: unknown kind");
}

Vector SketchOperator::apply(std::span<const double> v) const {
  Vector out(rows_);
  apply(v, out);
  return out;
}

void SketchOperator::apply(std::span<const double> v, std::span<double> out) const {
  if (v.size() != cols_ || out.size() != rows_)
    throw SketchError("sketch apply: dimension mismatch");
  switch (kind_) {
    case SketchKind::identity:
      std::copy(v.begin(), v.end(), out.begin());
      break;
    case SketchKind::gaussian:
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t j = 0; j < cols_; ++j)
        if (v[j] != 0.0) axpy(v[j], dense_->col(j), out);
      break;
    case SketchKind::countsketch:
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t j = 0; j < cols_; ++j)
        out[(*buckets_)[j]] += (*signs_)[j] * v[j];
      break;
  }
}

DenseMatrix SketchOperator::materialize() const {
  switch (kind_) {
    case SketchKind::identity: return DenseMatrix::identity(cols_);
    case SketchKind::gaussian: return *dense_;
    case SketchKind::countsketch: {
      DenseMatrix m(rows_, cols_);
      for (std::size_t j = 0; j < cols_; ++j) m((*buckets_)[j], j) = (*signs_)[j];
      return m;
    }
  }
  return {};
}

DenseMatrix SketchOperator::apply_cols(const DenseMatrix& m) const {
  if (m.rows() != cols_) throw SketchError("sketch apply_cols: dimension mismatch");
  DenseMatrix out(rows_, m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) apply(m.col(j), out.col(j));
  return out;
}

std::size_t SketchOperator::bucket(std::size_t j) const {
  if (kind_ != SketchKind::countsketch) throw SketchError("bucket: not a CountSketch");
  return (*buckets_).at(j);
}

double SketchOperator::sign(std::size_t j) const {
  if (kind_ != SketchKind::countsketch) throw SketchError("sign: not a CountSketch");
  return (*signs_).at(j);
}

DistortionRange embedding_distortion_exact(const SketchOperator& s,
                                           const DenseMatrix& basis) {
  if (basis.rows() != s.cols())
    throw SketchError("embedding_distortion: basis dimension mismatch");
  const SvdFactors f = svd(s.apply_cols(basis));
  if (f.sigma.empty()) return {};
  return {f.sigma.back(), f.sigma.front()};
}

DistortionRange embedding_distortion(const SketchOperator& s,
                                     const DenseMatrix& basis,
                                     std::size_t n_probes, std::uint64_t seed) {
  if (n_probes == 0) return embedding_distortion_exact(s, basis);
  if (basis.rows() != s.cols())
    throw SketchError("embedding_distortion: basis dimension mismatch");
  Rng rng(derive_seed(seed, "distortion-probes"));
  DistortionRange out{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t p = 0; p < n_probes; ++p) {
    const Vector c = gaussian_vector(basis.cols(), rng);
    const Vector v = matvec(basis, c);
    const double ratio = norm2(s.apply(v)) / norm2(v);
    out.min_ratio = std::min(out.min_ratio, ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  return out;
}

}  // namespace sfk
