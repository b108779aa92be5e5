// AArch64 NEON variants (Advanced SIMD is part of the AArch64 baseline).

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "neurocpd/simd/kernels.hpp"

namespace neurocpd::simd::detail {
namespace {

constexpr std::size_t kWidth = 2;

// [v]_+ keeping NaN: vmaxq_f64 propagates NaN operands.
inline float64x2_t relu(float64x2_t v) { return vmaxq_f64(v, vdupq_n_f64(0.0)); }

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 * kWidth <= n; i += 2 * kWidth) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(&x[i]), vld1q_f64(&y[i]));
    acc1 = vfmaq_f64(acc1, vld1q_f64(&x[i + kWidth]), vld1q_f64(&y[i + kWidth]));
  }
  for (; i + kWidth <= n; i += kWidth) acc0 = vfmaq_f64(acc0, vld1q_f64(&x[i]), vld1q_f64(&y[i]));
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq(std::span<const double> x) { return dot(x, x); }

double sq_dist(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t d = vsubq_f64(vld1q_f64(&x[i]), vld1q_f64(&y[i]));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double max_abs(std::span<const double> x) {
  const std::size_t n = x.size();
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(&x[i])));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, std::abs(x[i]));
  return r;
}

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) vst1q_f64(&y[i], vfmaq_f64(vld1q_f64(&y[i]), va, vld1q_f64(&x[i])));
  for (; i < n; ++i) y[i] += a * x[i];
}

void hadamard(std::span<const double> x, std::span<const double> y, std::span<double> out) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) vst1q_f64(&out[i], vmulq_f64(vld1q_f64(&x[i]), vld1q_f64(&y[i])));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void projected_step(std::span<const double> x, std::span<const double> g, double lambda,
                    std::span<double> out) {
  const std::size_t n = x.size();
  const float64x2_t vl = vdupq_n_f64(lambda);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t vx = vld1q_f64(&x[i]);
    const float64x2_t p = relu(vsubq_f64(vx, vld1q_f64(&g[i])));
    vst1q_f64(&out[i], vaddq_f64(vx, vmulq_f64(vl, vsubq_f64(p, vx))));
  }
  for (; i < n; ++i) {
    const double p = std::max(x[i] - g[i], 0.0);
    out[i] = x[i] + lambda * (p - x[i]);
  }
}

void semi_implicit_step(std::span<const double> x, std::span<const double> g, double lambda,
                        double weight, std::span<double> out) {
  const std::size_t n = x.size();
  const double inv = 1.0 / (1.0 + lambda);
  const float64x2_t vinv = vdupq_n_f64(inv);
  const float64x2_t vw = vdupq_n_f64(weight);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t vx = vld1q_f64(&x[i]);
    const float64x2_t p = relu(vsubq_f64(vx, vld1q_f64(&g[i])));
    vst1q_f64(&out[i], vmulq_f64(vaddq_f64(vx, vmulq_f64(vw, p)), vinv));
  }
  for (; i < n; ++i) {
    const double p = std::max(x[i] - g[i], 0.0);
    out[i] = (x[i] + weight * p) * inv;
  }
}

double kkt_residual_max(std::span<const double> x, std::span<const double> g) {
  const std::size_t n = x.size();
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t vx = vld1q_f64(&x[i]);
    const float64x2_t p = relu(vsubq_f64(vx, vld1q_f64(&g[i])));
    m = vmaxq_f64(m, vabsq_f64(vsubq_f64(vx, p)));
  }
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) {
    const double p = std::max(x[i] - g[i], 0.0);
    r = std::max(r, std::abs(x[i] - p));
  }
  return r;
}

void multiplicative_update(std::span<const double> x, std::span<const double> num,
                           std::span<const double> den, double guard, std::span<double> out) {
  const std::size_t n = x.size();
  const float64x2_t vg = vdupq_n_f64(guard);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t q = vmulq_f64(vld1q_f64(&x[i]), vld1q_f64(&num[i]));
    vst1q_f64(&out[i], vdivq_f64(q, vaddq_f64(vld1q_f64(&den[i]), vg)));
  }
  for (; i < n; ++i) out[i] = x[i] * num[i] / (den[i] + guard);
}

}  // namespace

const Kernels& neon_kernels() noexcept {
  static const Kernels k{.isa = Isa::neon,
                         .dot = dot,
                         .sum_sq = sum_sq,
                         .sq_dist = sq_dist,
                         .max_abs = max_abs,
                         .all_finite = all_finite,
                         .axpy = axpy,
                         .hadamard = hadamard,
                         .projected_step = projected_step,
                         .semi_implicit_step = semi_implicit_step,
                         .kkt_residual_max = kkt_residual_max,
                         .multiplicative_update = multiplicative_update};
  return k;
}

}  // namespace neurocpd::simd::detail
