#pragma once

#include <cstdint>
#include <random>

#include "ura/linalg.hpp"

namespace ura {

using Rng = std::mt19937_64;

/// Named sub-streams split off a master seed.
///
/// A stream seed is `derive_seed(parent, stream, a, b)`: the parent seed, the
/// stream tag and two counters are folded one at a time through the splitmix64
/// finalizer. Counters are trial / slot / user indices depending on the stream.
enum class Stream : std::uint64_t {
  codebook = 1,
  parity = 2,
  trial = 3,
  slot = 4,
  channel = 5,
  noise = 6,
  detector = 7,
  users = 8,
  messages = 9,
  channel_spec = 10,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

std::uint64_t derive_seed(std::uint64_t parent, Stream stream, std::uint64_t a = 0,
                          std::uint64_t b = 0) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// One circularly-symmetric CN(0, 1) draw: two N(0,1) halves scaled by 1/sqrt(2).
cplx complex_normal(Rng& rng);

/// Matrix of i.i.d. CN(0, variance) entries, drawn in column-major order.
CMatrix complex_normal_matrix(Index rows, Index cols, Rng& rng, double variance = 1.0);

}  // namespace ura
