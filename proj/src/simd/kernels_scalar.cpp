#include <algorithm>
#include <cmath>

#include "neurocpd/simd/kernels.hpp"

namespace neurocpd::simd::detail {
namespace {

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double sum_sq(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double sq_dist(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void hadamard(std::span<const double> x, std::span<const double> y, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
}

void projected_step(std::span<const double> x, std::span<const double> g, double lambda,
                    std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = std::max(x[i] - g[i], 0.0);
    out[i] = x[i] + lambda * (p - x[i]);
  }
}

void semi_implicit_step(std::span<const double> x, std::span<const double> g, double lambda,
                        double weight, std::span<double> out) {
  const double inv = 1.0 / (1.0 + lambda);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = std::max(x[i] - g[i], 0.0);
    out[i] = (x[i] + weight * p) * inv;
  }
}

double kkt_residual_max(std::span<const double> x, std::span<const double> g) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = std::max(x[i] - g[i], 0.0);
    m = std::max(m, std::abs(x[i] - p));
  }
  return m;
}

void multiplicative_update(std::span<const double> x, std::span<const double> num,
                           std::span<const double> den, double guard, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * num[i] / (den[i] + guard);
}

}  // namespace

const Kernels& scalar_kernels() noexcept {
  static const Kernels k{.isa = Isa::scalar,
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
