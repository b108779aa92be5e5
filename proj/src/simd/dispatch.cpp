#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "neurocpd/simd/kernels.hpp"

namespace neurocpd::simd {
namespace {

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(NEUROCPD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(NEUROCPD_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Kernels* resolve_initial() noexcept {
  if (const char* env = std::getenv("NEUROCPD_ISA")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
      if (want == isa_name(isa) && is_available(isa)) return &table(isa);
  }
  return &table(best_available());
}

std::atomic<const Kernels*>& current() noexcept {
  static std::atomic<const Kernels*> ptr{resolve_initial()};
  return ptr;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

bool is_available(Isa isa) noexcept { return cpu_supports(isa); }

Isa best_available() noexcept {
  if (is_available(Isa::avx2)) return Isa::avx2;
  if (is_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

const Kernels& table(Isa isa) {
  if (!is_available(isa))
    throw std::invalid_argument("instruction set not available: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(NEUROCPD_HAVE_AVX2)
    case Isa::avx2:
      return detail::avx2_kernels();
#endif
#if defined(NEUROCPD_HAVE_NEON)
    case Isa::neon:
      return detail::neon_kernels();
#endif
    default:
      return detail::scalar_kernels();
  }
}

const Kernels& active() noexcept { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace neurocpd::simd
