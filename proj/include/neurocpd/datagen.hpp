#pragma once

// Synthetic nonnegative CPD problems: uniform random low-rank tensors,
// "difficult" tensors whose rank exceeds every dimension, and tensors built
// from factors with prescribed column collinearity.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "neurocpd/random.hpp"
#include "neurocpd/tensor.hpp"

namespace neurocpd {

/// Closed range lo <= mu <= hi for pairwise column collinearity.
struct MuRange {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double mu) const noexcept { return mu >= lo && mu <= hi; }
};

/// Pairwise mu_{mn} = a_m^T a_n / (||a_m|| ||a_n||); DomainError on a zero column.
Matrix collinearity(const Matrix& m);

/// True when every off-diagonal collinearity lies in `range`.
bool collinearity_within(const Matrix& m, MuRange range);

/// Nonnegative dim x R factor whose off-diagonal collinearities all lie in
/// `range`. Columns are w + eta u_r with a shared positive w and sparse
/// positive u_r on (nearly) disjoint supports; eta is found by bisection.
/// Throws InfeasibleError after 200 bisection steps without success.
Matrix gen_collinear_factor(std::size_t dim, std::size_t rank, MuRange range, Rng& rng);
Matrix gen_collinear_factor(std::size_t dim, std::size_t rank, MuRange range, std::uint64_t seed);

struct Problem {
  std::string kind;
  std::uint64_t seed = 0;
  DenseTensor tensor;
  KruskalModel truth;
  std::vector<std::optional<MuRange>> mu_ranges;  // per factor, empty for plain uniform factors
  std::optional<double> snr_db;
};

/// Known kinds:
///   difficult9            9x9x9, R = 10
///   difficult9_R11..R16   9x9x9, R = 11..16
///   medium70              70x70x70, R = 75
///   caseI                 20x20x20, R = 10; factors 0,1 mu in [0.4, 0.6], factor 2 in [0.96, 0.99]
///   caseII                20x20x20, R = 10; factor 0 mu in [0.4, 0.6], factors 1,2 in [0.96, 0.99]
///   lowrank:IxJxK:R       uniform [0, 1) factors of the given shape and rank
/// With `snr_db`, i.i.d. uniform noise scaled to that SNR is added and the
/// result clipped at 0. Deterministic per (kind, seed, snr_db).
Problem gen_problem(const std::string& kind, std::uint64_t seed,
                    std::optional<double> snr_db = std::nullopt);

/// Sidecar key-values: kind, seed, shape, rank, snr_db, mu ranges.
std::map<std::string, std::string> problem_metadata(const Problem& p);

/// Writes the tensor to `path`, the truth model to `path`.truth and the
/// metadata to `path`.meta.
void save_problem(const std::filesystem::path& path, const Problem& p);

/// Uniform [0, 1) factors rescaled so that ||full(model)|| matches ||t||.
KruskalModel random_init(const DenseTensor& t, std::size_t rank, Rng& rng);

}  // namespace neurocpd
