#pragma once

/// \file sfk/random.hpp
/// \brief Seeded random streams shared by every generator in the library.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "sfk/linalg.hpp"

namespace sfk {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; mixes a master seed with a stream tag so that
/// independent components (noise, sketch, truncation, ...) never share draws.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  return mix_seed(seed, stream_tag(name));
}

inline Vector gaussian_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

/// Uniform on the unit sphere of R^n.
inline Vector unit_vector(std::size_t n, Rng& rng) {
  Vector v = gaussian_vector(n, rng);
  const double nv = norm2(v);
  for (double& x : v) x /= nv;
  return v;
}

inline DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols,
                                   Rng& rng) {
  return DenseMatrix(rows, cols, gaussian_vector(rows * cols, rng));
}

}  // namespace sfk
