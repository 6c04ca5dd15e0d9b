#include "sfk/truncate.hpp"

#include <algorithm>

#include "sfk/random.hpp"

namespace sfk {

std::string to_string(TruncationKind kind) {
  switch (kind) {
    case TruncationKind::identity: return "identity";
    case TruncationKind::rank_exact: return "rank_exact";
    case TruncationKind::rank_randomized: return "rank_randomized";
  }
  return "unknown";
}

namespace {

void check_rank(const ImageGrid& grid, std::size_t rank) {
  if (grid.size() == 0) throw OperatorError("truncation: empty grid");
  if (rank == 0) throw OperatorError("truncation: rank must be >= 1");
  if (rank > std::min(grid.height, grid.width))
    throw OperatorError("truncation: rank exceeds min(height, width)");
}

}  // namespace

TruncationOperator TruncationOperator::identity() { return {}; }

TruncationOperator TruncationOperator::rank_exact(const ImageGrid& grid,
                                                  std::size_t rank) {
  check_rank(grid, rank);
  TruncationOperator t;
  t.kind_ = TruncationKind::rank_exact;
  t.grid_ = grid;
  t.rank_ = rank;
  return t;
}

TruncationOperator TruncationOperator::rank_randomized(const ImageGrid& grid,
                                                       std::size_t rank,
                                                       RandomizedSvdParams params) {
  check_rank(grid, rank);
  if (rank + params.oversample > std::min(grid.height, grid.width))
    throw OperatorError(
        "truncation: rank + oversample exceeds min(height, width)");
  TruncationOperator t;
  t.kind_ = TruncationKind::rank_randomized;
  t.grid_ = grid;
  t.rank_ = rank;
  t.rnd_ = params;
  return t;
}

Vector TruncationOperator::apply(std::span<const double> c,
                                 std::uint64_t call_index) const {
  if (kind_ == TruncationKind::identity) return Vector(c.begin(), c.end());
  if (c.size() != grid_.size())
    throw OperatorError("truncation: vector length does not match grid");
  const DenseMatrix image = unvec(grid_, c);
  SvdFactors f;
  if (kind_ == TruncationKind::rank_exact) {
    f = svd(image).truncated(rank_);
  } else {
    RandomizedSvdParams p = rnd_;
    p.seed = mix_seed(rnd_.seed, call_index);
    f = randomized_svd(image, rank_, p);
  }
  return vec(f.reconstruct());
}

}  // namespace sfk
