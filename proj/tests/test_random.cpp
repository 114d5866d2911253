#include <doctest.h>

#include <set>

#include "ura/random.hpp"

using namespace ura;

TEST_CASE("derive_seed separates streams and indices") {
  std::set<std::uint64_t> seen;
  for (auto stream : {Stream::codebook, Stream::parity, Stream::trial, Stream::channel, Stream::noise})
    for (std::uint64_t a = 0; a < 50; ++a) seen.insert(derive_seed(42, stream, a));
  CHECK(seen.size() == 250);
  CHECK(derive_seed(42, Stream::slot, 1, 2) != derive_seed(42, Stream::slot, 2, 1));
  CHECK(derive_seed(42, Stream::noise, 3) == derive_seed(42, Stream::noise, 3));
}

TEST_CASE("complex normal has unit variance and independent parts") {
  Rng rng = make_rng(7);
  const CMatrix z = complex_normal_matrix(200, 100, rng);
  const double power = z.cwiseAbs2().mean();
  const double cross = (z.real().array() * z.imag().array()).mean();
  CHECK(power == doctest::Approx(1.0).epsilon(0.03));
  CHECK(std::abs(cross) < 0.01);
  CHECK(std::abs(z.mean()) < 0.02);
}

TEST_CASE("variance argument scales power") {
  Rng a = make_rng(3);
  Rng b = make_rng(3);
  const CMatrix unit = complex_normal_matrix(4, 4, a);
  const CMatrix scaled = complex_normal_matrix(4, 4, b, 9.0);
  CHECK((scaled - 3.0 * unit).norm() < 1e-12);
}
