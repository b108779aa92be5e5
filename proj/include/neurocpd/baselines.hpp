#pragma once

// Reference algorithms for nonnegative CPD: hierarchical alternating least
// squares (HALS) and multiplicative updates (MUR).

#include <cstddef>

#include "neurocpd/random.hpp"
#include "neurocpd/tensor.hpp"

namespace neurocpd {

/// One HALS sweep: for r = 0..R-1 and each mode in turn, column r of that
/// factor is replaced by the projected minimizer of the rank-one subproblem
///   a_r <- [(M(:, r) - A_{-r} P(-r, r)) / P(r, r)]_+
/// with M and P computed from the current factors (no residual tensor is
/// formed). A column whose denominator vanishes is redrawn uniformly in [0, 1)
/// unless the tensor is zero; `reseeded` counts those events.
KruskalModel hals_sweep(const DenseTensor& t, KruskalModel model, Rng& rng,
                        std::size_t* reseeded = nullptr);
KruskalModel hals_sweep(const DenseTensor& t, KruskalModel model);

/// Denominator guard used by mur_sweep.
inline constexpr double kMurGuard = 1e-16;

/// One MUR sweep, modes in order: A <- A * M / (A P + guard).
KruskalModel mur_sweep(const DenseTensor& t, KruskalModel model);

}  // namespace neurocpd
