#pragma once

/// \file sfk/sketch.hpp
/// \brief Seeded random sketching operators R^d -> R^s.

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "sfk/linalg.hpp"

namespace sfk {

class SketchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SketchKind { identity, gaussian, countsketch };

std::string to_string(SketchKind kind);
SketchKind sketch_kind_from_string(const std::string& name);

/// Immutable sketch. Gaussian sketches hold their s x d matrix; CountSketch
/// holds one (row, sign) pair per input coordinate.
class SketchOperator {
 public:
  SketchOperator() = default;

  SketchKind kind() const noexcept { return kind_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double scale() const noexcept { return scale_; }

  Vector apply(std::span<const double> v) const;
  void apply(std::span<const double> v, std::span<double> out) const;
  /// Dense s x d copy (test oracles and bound evaluation only).
  DenseMatrix materialize() const;
  /// S·M for a d x k matrix M.
  DenseMatrix apply_cols(const DenseMatrix& m) const;

  /// CountSketch hash h(j) and sign of input coordinate j.
  std::size_t bucket(std::size_t j) const;
  double sign(std::size_t j) const;

  friend SketchOperator identity_sketch(std::size_t d);
  friend SketchOperator gaussian_sketch(std::size_t s, std::size_t d,
                                        std::uint64_t seed, double scale);
  friend SketchOperator countsketch(std::size_t s, std::size_t d,
                                    std::uint64_t seed);

 private:
  SketchKind kind_ = SketchKind::identity;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::uint64_t seed_ = 0;
  double scale_ = 1.0;
  std::shared_ptr<const DenseMatrix> dense_;
  std::shared_ptr<const std::vector<std::uint32_t>> buckets_;
  std::shared_ptr<const std::vector<std::int8_t>> signs_;
};

/// s = d exact identity; reduces sketched solvers to their unsketched form.
SketchOperator identity_sketch(std::size_t d);

/// Entries i.i.d. N(0,1) times `scale`. Pass scale <= 0 for the default 1/√s.
SketchOperator gaussian_sketch(std::size_t s, std::size_t d, std::uint64_t seed,
                               double scale = 0.0);

SketchOperator countsketch(std::size_t s, std::size_t d, std::uint64_t seed);

SketchOperator make_sketch(SketchKind kind, std::size_t s, std::size_t d,
                           std::uint64_t seed);

struct DistortionRange {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// Extremes of ‖S V c‖ / ‖V c‖ over `n_probes` random coefficient vectors c.
/// With n_probes == 0 the exact extremes (extreme singular values of S·V)
/// are returned instead.
DistortionRange embedding_distortion(const SketchOperator& s,
                                     const DenseMatrix& basis,
                                     std::size_t n_probes, std::uint64_t seed);

/// Exact extremes via the singular values of S·V.
DistortionRange embedding_distortion_exact(const SketchOperator& s,
                                           const DenseMatrix& basis);

}  // namespace sfk
