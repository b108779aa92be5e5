#include "neurocpd/random.hpp"

namespace neurocpd {

Rng make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(a), hi(a), lo(b), hi(b), lo(c), hi(c)};
  return Rng(seq);
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo, double hi) {
  Matrix m(rows, cols);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace neurocpd
