#include "ura/random.hpp"

#include <cmath>

namespace ura {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, Stream stream, std::uint64_t a,
                          std::uint64_t b) noexcept {
  std::uint64_t h = splitmix64(parent);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ b);
}

namespace {

constexpr double kHalfSqrt2 = 0.70710678118654752440;

cplx draw(std::normal_distribution<double>& normal, Rng& rng) {
  const double re = normal(rng);
  const double im = normal(rng);
  return {kHalfSqrt2 * re, kHalfSqrt2 * im};
}

}  // namespace

cplx complex_normal(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return draw(normal, rng);
}

CMatrix complex_normal_matrix(Index rows, Index cols, Rng& rng, double variance) {
  const double amp = std::sqrt(variance);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix out(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) out(r, c) = amp * draw(normal, rng);
  return out;
}

}  // namespace ura
