#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>

#include "ura/linalg.hpp"

namespace ura {

/// The common coding matrix shared by every user: column i is the codeword
/// sent for inner index i. Entries are CN(0, 1); with `normalized` each
/// column is rescaled to squared norm exactly D.
struct Codebook {
  CMatrix a;  ///< D x n_cw
  std::uint64_t seed = 0;
  bool normalized = false;

  Index dimension() const noexcept { return a.rows(); }
  Index size() const noexcept { return a.cols(); }
  auto column(Index i) const { return a.col(i); }
};

inline constexpr std::size_t kDefaultCodebookBudget = std::size_t{1} << 30;  // bytes

/// Deterministic in `seed`. Throws InvalidParameter on empty shapes and
/// ResourceError when d * n_cw complex entries exceed `budget_bytes`.
Codebook generate_codebook(std::uint64_t seed, Index d, Index n_cw, bool normalized,
                           std::size_t budget_bytes = kDefaultCodebookBudget);

/// Binary form: four little-endian u64 header words (d, n_cw, seed,
/// normalized) followed by the column-major interleaved re/im float64 payload.
void write_codebook(std::ostream& out, const Codebook& cb);
Codebook read_codebook(std::istream& in, std::size_t budget_bytes = kDefaultCodebookBudget);

}  // namespace ura
