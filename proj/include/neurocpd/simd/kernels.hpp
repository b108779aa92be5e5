#pragma once

// Data-parallel inner loops shared by all solvers.
//
// Every kernel has a scalar reference implementation; vector variants (AVX2+FMA
// on x86-64, NEON on AArch64) are chosen once at runtime from the CPU feature
// set. The variants are required to agree with the reference to a few ulps per
// accumulated term; tests/simd_equivalence_test.cpp enforces this.

#include <cstddef>
#include <span>
#include <string_view>

namespace neurocpd::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

/// Function table for one instruction set. All spans passed to one call must
/// have equal length; output spans may alias the matching input exactly.
struct Kernels {
  Isa isa;

  /// sum_i x_i y_i
  double (*dot)(std::span<const double> x, std::span<const double> y);
  /// sum_i x_i^2
  double (*sum_sq)(std::span<const double> x);
  /// sum_i (x_i - y_i)^2
  double (*sq_dist)(std::span<const double> x, std::span<const double> y);
  /// max_i |x_i|; inputs are assumed finite (check with all_finite first)
  double (*max_abs)(std::span<const double> x);
  /// true when no entry is NaN or infinite
  bool (*all_finite)(std::span<const double> x);
  /// y += a x
  void (*axpy)(double a, std::span<const double> x, std::span<double> y);
  /// out = x * y (entrywise)
  void (*hadamard)(std::span<const double> x, std::span<const double> y, std::span<double> out);
  /// out = x + lambda ([x - g]_+ - x)
  void (*projected_step)(std::span<const double> x, std::span<const double> g, double lambda,
                         std::span<double> out);
  /// out = (x + weight [x - g]_+) / (1 + lambda)
  void (*semi_implicit_step)(std::span<const double> x, std::span<const double> g, double lambda,
                             double weight, std::span<double> out);
  /// max_i |x_i - [x_i - g_i]_+|; inputs are assumed finite
  double (*kkt_residual_max)(std::span<const double> x, std::span<const double> g);
  /// out = x * num / (den + guard)
  void (*multiplicative_update)(std::span<const double> x, std::span<const double> num,
                                std::span<const double> den, double guard, std::span<double> out);
};

/// Table used by the library; resolved on first use from the CPU features,
/// or from the NEUROCPD_ISA environment variable (scalar|avx2|neon) when set.
const Kernels& active() noexcept;

/// Best instruction set supported by both this build and the running CPU.
Isa best_available() noexcept;

/// True when `isa` is compiled in and supported by the running CPU.
bool is_available(Isa isa) noexcept;

/// Table for a specific instruction set; throws if it is not available.
const Kernels& table(Isa isa);

/// Replaces the active table. Not thread-safe with concurrent kernel calls;
/// intended for tests and the CLI's --isa switch.
void select(Isa isa);

namespace detail {
const Kernels& scalar_kernels() noexcept;
#if defined(NEUROCPD_HAVE_AVX2)
const Kernels& avx2_kernels() noexcept;
#endif
#if defined(NEUROCPD_HAVE_NEON)
const Kernels& neon_kernels() noexcept;
#endif
}  // namespace detail

}  // namespace neurocpd::simd
