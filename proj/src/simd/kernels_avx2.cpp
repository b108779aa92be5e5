// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a CPU feature check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "neurocpd/simd/kernels.hpp"

namespace neurocpd::simd::detail {
namespace {

constexpr std::size_t kWidth = 4;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// [v]_+ with NaN propagated (MAXPD returns its second operand on NaN).
inline __m256d relu_pd(__m256d v) { return _mm256_max_pd(_mm256_setzero_pd(), v); }

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kWidth <= n; i += 2 * kWidth) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i + kWidth]), _mm256_loadu_pd(&y[i + kWidth]), acc1);
  }
  for (; i + kWidth <= n; i += kWidth)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq(std::span<const double> x) { return dot(x, x); }

double sq_dist(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double max_abs(std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) m = _mm256_max_pd(m, abs_pd(_mm256_loadu_pd(&x[i])));
  double r = hmax(m);
  for (; i < n; ++i) r = std::max(r, std::abs(x[i]));
  return r;
}

bool all_finite(std::span<const double> x) {
  // v * 0 is 0 for finite v and NaN otherwise.
  const std::size_t n = x.size();
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(&x[i]), zero));
  if (_mm256_movemask_pd(_mm256_cmp_pd(acc, zero, _CMP_EQ_OQ)) != 0xF) return false;
  for (; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth)
    _mm256_storeu_pd(&y[i], _mm256_fmadd_pd(va, _mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i])));
  for (; i < n; ++i) y[i] += a * x[i];
}

void hadamard(std::span<const double> x, std::span<const double> y, std::span<double> out) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth)
    _mm256_storeu_pd(&out[i], _mm256_mul_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i])));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void projected_step(std::span<const double> x, std::span<const double> g, double lambda,
                    std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d vl = _mm256_set1_pd(lambda);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d vx = _mm256_loadu_pd(&x[i]);
    const __m256d p = relu_pd(_mm256_sub_pd(vx, _mm256_loadu_pd(&g[i])));
    _mm256_storeu_pd(&out[i], _mm256_add_pd(vx, _mm256_mul_pd(vl, _mm256_sub_pd(p, vx))));
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
  const __m256d vinv = _mm256_set1_pd(inv);
  const __m256d vw = _mm256_set1_pd(weight);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d vx = _mm256_loadu_pd(&x[i]);
    const __m256d p = relu_pd(_mm256_sub_pd(vx, _mm256_loadu_pd(&g[i])));
    _mm256_storeu_pd(&out[i], _mm256_mul_pd(_mm256_add_pd(vx, _mm256_mul_pd(vw, p)), vinv));
  }
  for (; i < n; ++i) {
    const double p = std::max(x[i] - g[i], 0.0);
    out[i] = (x[i] + weight * p) * inv;
  }
}

double kkt_residual_max(std::span<const double> x, std::span<const double> g) {
  const std::size_t n = x.size();
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d vx = _mm256_loadu_pd(&x[i]);
    const __m256d p = relu_pd(_mm256_sub_pd(vx, _mm256_loadu_pd(&g[i])));
    m = _mm256_max_pd(m, abs_pd(_mm256_sub_pd(vx, p)));
  }
  double r = hmax(m);
  for (; i < n; ++i) {
    const double p = std::max(x[i] - g[i], 0.0);
    r = std::max(r, std::abs(x[i] - p));
  }
  return r;
}

void multiplicative_update(std::span<const double> x, std::span<const double> num,
                           std::span<const double> den, double guard, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d vg = _mm256_set1_pd(guard);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d q = _mm256_mul_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&num[i]));
    _mm256_storeu_pd(&out[i], _mm256_div_pd(q, _mm256_add_pd(_mm256_loadu_pd(&den[i]), vg)));
  }
  for (; i < n; ++i) out[i] = x[i] * num[i] / (den[i] + guard);
}

}  // namespace

const Kernels& avx2_kernels() noexcept {
  static const Kernels k{.isa = Isa::avx2,
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
