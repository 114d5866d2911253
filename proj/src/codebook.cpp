#include "ura/codebook.hpp"

#include <array>
#include <cmath>
#include <istream>
#include <ostream>

#include "ura/channel_model.hpp"
#include "ura/errors.hpp"
#include "ura/random.hpp"

namespace ura {

namespace {

void check_budget(Index d, Index n_cw, std::size_t budget_bytes) {
  const auto entries = static_cast<unsigned long long>(d) * static_cast<unsigned long long>(n_cw);
  if (entries > budget_bytes / sizeof(cplx))
    throw ResourceError("codebook of " + std::to_string(d) + " x " + std::to_string(n_cw) +
                        " exceeds the memory budget of " + std::to_string(budget_bytes) +
                        " bytes");
}

}  // namespace

Codebook generate_codebook(std::uint64_t seed, Index d, Index n_cw, bool normalized,
                           std::size_t budget_bytes) {
  if (d < 1 || n_cw < 1) throw InvalidParameter("codebook needs d >= 1 and n_cw >= 1");
  check_budget(d, n_cw, budget_bytes);

  Rng rng = make_rng(seed);
  Codebook cb;
  cb.seed = seed;
  cb.normalized = normalized;
  cb.a = complex_normal_matrix(d, n_cw, rng);
  if (normalized) {
    const double target = std::sqrt(static_cast<double>(d));
    for (Index i = 0; i < n_cw; ++i) cb.a.col(i) *= target / cb.a.col(i).norm();
  }
  return cb;
}

void write_codebook(std::ostream& out, const Codebook& cb) {
  const std::array<std::uint64_t, 4> header{
      static_cast<std::uint64_t>(cb.dimension()), static_cast<std::uint64_t>(cb.size()), cb.seed,
      cb.normalized ? 1ULL : 0ULL};
  out.write(reinterpret_cast<const char*>(header.data()), sizeof(header));
  export_complex_matrix(out, cb.a);
}

Codebook read_codebook(std::istream& in, std::size_t budget_bytes) {
  std::array<std::uint64_t, 4> header{};
  in.read(reinterpret_cast<char*>(header.data()), sizeof(header));
  if (!in) throw UsageError("truncated codebook header");
  if (header[0] == 0 || header[1] == 0 || header[3] > 1) throw UsageError("bad codebook header");
  const auto d = static_cast<Index>(header[0]);
  const auto n = static_cast<Index>(header[1]);
  check_budget(d, n, budget_bytes);
  Codebook cb;
  cb.seed = header[2];
  cb.normalized = header[3] == 1;
  cb.a = import_complex_matrix(in, d, n);
  return cb;
}

}  // namespace ura
