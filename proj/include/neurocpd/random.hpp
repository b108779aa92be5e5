#pragma once

#include <cstdint>
#include <random>

#include "neurocpd/tensor.hpp"

namespace neurocpd {

using Rng = std::mt19937_64;

/// Independent stream for (seed, a, b, c), e.g. (seed, particle, iteration, purpose).
Rng make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0);

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0);

/// rows x cols matrix with i.i.d. uniform [lo, hi) entries, filled column by column.
Matrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = 0.0, double hi = 1.0);

}  // namespace neurocpd
