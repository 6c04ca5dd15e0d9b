#pragma once

/// \file sfk/truncate.hpp
/// \brief Basis-modification maps τ applied to each new solution direction.

#include <cstdint>
#include <span>
#include <string>

#include "sfk/linalg.hpp"
#include "sfk/operators.hpp"

namespace sfk {

enum class TruncationKind { identity, rank_exact, rank_randomized };

std::string to_string(TruncationKind kind);

/// τ: R^n -> R^n. The rank kinds reshape the vector onto `grid`, keep the
/// leading `rank` singular triplets, and vectorize back.
class TruncationOperator {
 public:
  /// Identity map.
  TruncationOperator() = default;

  static TruncationOperator identity();
  static TruncationOperator rank_exact(const ImageGrid& grid, std::size_t rank);
  static TruncationOperator rank_randomized(const ImageGrid& grid,
                                            std::size_t rank,
                                            RandomizedSvdParams params = {});

  TruncationKind kind() const noexcept { return kind_; }
  std::size_t rank() const noexcept { return rank_; }
  const ImageGrid& grid() const noexcept { return grid_; }
  const RandomizedSvdParams& randomized_params() const noexcept { return rnd_; }

  /// `call_index` selects the random stream of the randomized kind so that a
  /// solver run (which passes its iteration index) is reproducible.
  Vector apply(std::span<const double> c, std::uint64_t call_index = 0) const;

 private:
  TruncationKind kind_ = TruncationKind::identity;
  std::size_t rank_ = 0;
  ImageGrid grid_{};
  RandomizedSvdParams rnd_{};
};

}  // namespace sfk
