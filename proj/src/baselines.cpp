#include "neurocpd/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "neurocpd/simd/kernels.hpp"

namespace neurocpd {

KruskalModel hals_sweep(const DenseTensor& t, KruskalModel model, Rng& rng, std::size_t* reseeded) {
  check_compatible(t, model);
  const std::size_t order = model.order();
  const std::size_t rank = model.rank();
  const auto& k = simd::active();
  const bool zero_tensor = k.max_abs(t.data()) == 0.0;
  std::vector<std::vector<double>> cross(order, std::vector<double>(rank));

  for (std::size_t r = 0; r < rank; ++r) {
    for (std::size_t n = 0; n < order; ++n) {
      // P(:, r) = prod_{m != n} A_m^T a_{m,r}
      std::vector<double> pcol(rank, 1.0);
      for (std::size_t m = 0; m < order; ++m) {
        if (m == n) continue;
        const Matrix& f = model.factor(m);
        for (std::size_t s = 0; s < rank; ++s) pcol[s] *= k.dot(f.col(s), f.col(r));
      }
      Matrix& a = model.factor(n);
      auto col = a.col(r);
      const double denom = pcol[r];
      if (!(denom > 0.0) || !std::isfinite(denom)) {
        if (zero_tensor) {
          std::fill(col.begin(), col.end(), 0.0);
        } else {
          for (double& v : col) v = uniform(rng);
          if (reseeded) ++*reseeded;
        }
        continue;
      }
      std::vector<double> num = mttkrp_column(t, model, n, r);
      for (std::size_t s = 0; s < rank; ++s)
        if (s != r) k.axpy(-pcol[s], a.col(s), num);
      for (std::size_t i = 0; i < col.size(); ++i) col[i] = std::max(0.0, num[i] / denom);
    }
  }
  return model;
}

KruskalModel hals_sweep(const DenseTensor& t, KruskalModel model) {
  Rng rng = make_rng(0);
  return hals_sweep(t, std::move(model), rng);
}

KruskalModel mur_sweep(const DenseTensor& t, KruskalModel model) {
  check_compatible(t, model);
  const auto& k = simd::active();
  for (std::size_t n = 0; n < model.order(); ++n) {
    const Matrix num = mttkrp(t, model, n);
    const Matrix den = multiply(model.factor(n), hadamard_gram(model, n));
    auto a = model.factor(n).data();
    k.multiplicative_update(a, num.data(), den.data(), kMurGuard, a);
  }
  return model;
}

}  // namespace neurocpd
